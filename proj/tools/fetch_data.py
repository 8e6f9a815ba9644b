#!/usr/bin/env python3
"""Fetches and prepares the five benchmark datasets under ./data.

Every CSV gets a header row so the loaders can address columns by name; the
matching .schema files are checked into data/ already.

  cancer   -> data/wdbc.csv           (WDBC; from scikit-learn if installed,
                                       otherwise downloaded from UCI)
  glass    -> data/glass.csv          (UCI glass identification)
  diabetes -> data/diabetes.csv       (Pima Indians diabetes)
  mnist    -> data/mnist/*-ubyte      (IDX, train + t10k)
  fashion  -> data/fashion_mnist/*-ubyte

Usage: python3 tools/fetch_data.py [dataset ...]   (default: all)
"""

import gzip
import io
import os
import sys
import urllib.request

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

WDBC_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin/wdbc.data"
GLASS_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/glass/glass.data"
PIMA_URLS = [
    "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.data.csv",
]
MNIST_MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "http://yann.lecun.com/exdb/mnist/",
]
FASHION_BASE = "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/"
IDX_FILES = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
]


def download(url):
    print("  fetching", url)
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read()


def write_text(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(text)
    print("  wrote", path)


def fetch_cancer():
    out = os.path.join(DATA, "wdbc.csv")
    header = "diagnosis," + ",".join(f"f{i:02d}" for i in range(1, 31))
    try:
        from sklearn.datasets import load_breast_cancer

        bunch = load_breast_cancer()
        # scikit-learn encodes 0 = malignant, 1 = benign
        rows = []
        for x, y in zip(bunch.data, bunch.target):
            label = "B" if y == 1 else "M"
            rows.append(label + "," + ",".join(repr(float(v)) for v in x))
        write_text(out, header + "\n" + "\n".join(rows) + "\n")
        return
    except ImportError:
        pass
    raw = download(WDBC_URL).decode()
    rows = []
    for line in raw.strip().splitlines():
        cells = line.split(",")
        rows.append(cells[1] + "," + ",".join(cells[2:]))  # drop the id column
    write_text(out, header + "\n" + "\n".join(rows) + "\n")


def fetch_glass():
    raw = download(GLASS_URL).decode()
    header = "id,ri,na,mg,al,si,k,ca,ba,fe,type"
    write_text(os.path.join(DATA, "glass.csv"), header + "\n" + raw.strip() + "\n")


def fetch_diabetes():
    header = "pregnancies,glucose,blood_pressure,skin_thickness,insulin,bmi,pedigree,age,outcome"
    last_error = None
    for url in PIMA_URLS:
        try:
            raw = download(url).decode()
            write_text(os.path.join(DATA, "diabetes.csv"), header + "\n" + raw.strip() + "\n")
            return
        except Exception as e:  # try the next mirror
            last_error = e
    raise last_error


def fetch_idx(subdir, bases):
    os.makedirs(os.path.join(DATA, subdir), exist_ok=True)
    for name in IDX_FILES:
        out = os.path.join(DATA, subdir, name)
        if os.path.exists(out):
            print("  exists", out)
            continue
        last_error = None
        for base in bases:
            try:
                blob = download(base + name + ".gz")
                with gzip.open(io.BytesIO(blob)) as g:
                    payload = g.read()
                with open(out, "wb") as f:
                    f.write(payload)
                print("  wrote", out)
                break
            except Exception as e:
                last_error = e
        else:
            raise last_error


FETCHERS = {
    "cancer": fetch_cancer,
    "glass": fetch_glass,
    "diabetes": fetch_diabetes,
    "mnist": lambda: fetch_idx("mnist", MNIST_MIRRORS),
    "fashion_mnist": lambda: fetch_idx("fashion_mnist", [FASHION_BASE]),
}


def main():
    targets = sys.argv[1:] or list(FETCHERS)
    failures = []
    for t in targets:
        if t not in FETCHERS:
            print("unknown dataset:", t)
            failures.append(t)
            continue
        print(t)
        try:
            FETCHERS[t]()
        except Exception as e:
            print("  FAILED:", e)
            failures.append(t)
    if failures:
        print("not fetched:", ", ".join(failures))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
