#!/usr/bin/env python3
"""Fetch and prepare the 72-sample / 7129-gene / 3-class leukemia benchmark.

The raw Golub microarray files are distributed by the Broad Institute
(GenePattern datasets page, www.broadinstitute.org/cancer/software/
genepattern/datasets): `data_set_ALL_AML_train.txt` (38 samples) and
`data_set_ALL_AML_independent.txt` (34 samples), tab-separated "res"-style
tables whose sample columns are interleaved with A/P call columns.

This script converts them into the dense CSV format used by the sparsemsvm
CLI (first column a 1-based label, then 7129 raw expression values; labels
1=ALL B-cell, 2=ALL T-cell, 3=AML, derived from the sample annotations).
Gene order is kept exactly as in the source files, which is the order the
contiguous 5-gene regularization blocks refer to.

Usage:
    python scripts/fetch_leukemia.py --train-file data_set_ALL_AML_train.txt \
        --test-file data_set_ALL_AML_independent.txt --out-dir data/leukemia
    python scripts/fetch_leukemia.py --download --out-dir data/leukemia

With --download the script tries the known mirrors first; in offline
environments download the two files manually and pass them with
--train-file/--test-file.
"""

import argparse
import pathlib
import re
import sys
import urllib.request

CANDIDATE_URLS = {
    "train": [
        "https://pubs.broadinstitute.org/mpr/projects/Leukemia/data_set_ALL_AML_train.txt",
        "https://www.broadinstitute.org/ftp/distribution/mpr/leukemia/data_set_ALL_AML_train.txt",
    ],
    "test": [
        "https://pubs.broadinstitute.org/mpr/projects/Leukemia/data_set_ALL_AML_independent.txt",
        "https://www.broadinstitute.org/ftp/distribution/mpr/leukemia/data_set_ALL_AML_independent.txt",
    ],
}

N_GENES = 7129


def classify(sample_name, overrides):
    if sample_name in overrides:
        return overrides[sample_name]
    name = sample_name.upper()
    if "AML" in name:
        return 3
    if "B-CELL" in name or "B_CELL" in name or "BCELL" in name:
        return 1
    if "T-CELL" in name or "T_CELL" in name or "TCELL" in name:
        return 2
    raise SystemExit(
        f"cannot infer the class of sample {sample_name!r}; pass --labels "
        "with `name,class` lines (1=ALL-B, 2=ALL-T, 3=AML)")


def parse_res_table(path, overrides):
    """Parse the Broad 'res'-style table: two leading description columns,
    then per-sample pairs of (expression value, A/P call)."""
    with open(path) as fh:
        lines = [l.rstrip("\n") for l in fh]
    header = lines[0].split("\t")
    # sample names sit in the header, each followed by an unnamed call column
    names = [c.strip() for c in header[2:] if c.strip() and c.strip().lower() != "call"]
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) < 2 + 2 * len(names):
            continue  # footer/annotation lines
        values = cells[2:2 + 2 * len(names):2]  # skip the call columns
        try:
            rows.append([float(v) for v in values])
        except ValueError:
            continue  # chip annotation rows
    if len(rows) != N_GENES:
        print(f"warning: parsed {len(rows)} genes from {path} (expected {N_GENES})",
              file=sys.stderr)
    labels = [classify(n, overrides) for n in names]
    # rows are genes x samples; transpose to samples x genes
    samples = list(zip(*rows))
    return names, labels, samples


def write_csv(path, labels, samples):
    with open(path, "w") as fh:
        for label, feats in zip(labels, samples):
            fh.write(",".join([str(label)] + [format(v, ".17g") for v in feats]) + "\n")


def download(which, dest):
    last = None
    for url in CANDIDATE_URLS[which]:
        try:
            print(f"trying {url}")
            urllib.request.urlretrieve(url, dest)
            return dest
        except Exception as exc:  # noqa: BLE001 - report and try the next mirror
            last = exc
    raise SystemExit(f"could not download the {which} file ({last}); fetch it "
                     "manually and pass --train-file/--test-file")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--train-file", help="local data_set_ALL_AML_train.txt")
    ap.add_argument("--test-file", help="local data_set_ALL_AML_independent.txt")
    ap.add_argument("--download", action="store_true")
    ap.add_argument("--labels", help="optional CSV of sample-name,class overrides")
    ap.add_argument("--out-dir", default="data/leukemia")
    args = ap.parse_args()

    overrides = {}
    if args.labels:
        for line in pathlib.Path(args.labels).read_text().splitlines():
            if line.strip():
                name, cls = line.rsplit(",", 1)
                overrides[name.strip()] = int(cls)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_raw = args.train_file
    test_raw = args.test_file
    if args.download:
        train_raw = train_raw or download("train", str(out / "raw_train.txt"))
        test_raw = test_raw or download("test", str(out / "raw_test.txt"))
    if not train_raw or not test_raw:
        raise SystemExit("pass --download or both --train-file and --test-file")

    for raw, name, expected in ((train_raw, "leukemia_train.csv", 38),
                                (test_raw, "leukemia_test.csv", 34)):
        names, labels, samples = parse_res_table(raw, overrides)
        if len(samples) != expected:
            print(f"warning: {raw} holds {len(samples)} samples (expected {expected})",
                  file=sys.stderr)
        write_csv(out / name, labels, samples)
        counts = {c: labels.count(c) for c in sorted(set(labels))}
        print(f"wrote {out / name}: {len(samples)} samples, classes {counts}")


if __name__ == "__main__":
    main()
