"""Write the Iris and Wine CSV fixtures used by the tests (needs scikit-learn)."""

from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris, load_wine

from arrowflow.data import Dataset, save_csv

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, loader in (("iris", load_iris), ("wine", load_wine)):
        b = loader()
        names = [n.replace(" ", "_").replace("(cm)", "cm").strip("_") for n in b.feature_names]
        ds = Dataset(b.data, b.target, names, list(np.unique(b.target)), name)
        save_csv(ds, OUT / f"{name}.csv")
        print(f"{name}: {ds.n} rows, {ds.X.shape[1]} features, {ds.C} classes")


if __name__ == "__main__":
    main()
