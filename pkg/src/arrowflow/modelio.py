"""Model files: a JSON header plus an optional ``.npz`` side-car for matrices.

With ``storage="text"`` every matrix is embedded in the JSON as base-10
numbers (Python float repr, so values round-trip exactly).  With
``storage="binary"`` matrices go to ``<model>.npz`` and the JSON holds
their keys.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import fields
from pathlib import Path
from typing import Optional

import numpy as np

from .encoder import EncodingPipeline, ProjectionMatrix, ScalerStats
from .ensemble import EnsembleConfig, EnsembleModel, View
from .layer import SortLayer
from .network import Network, NetworkConfig

FORMAT = "arrowflow-model"
VERSION = 1


class ModelFormatError(ValueError):
    pass


class _Matrices:
    def __init__(self, storage: str, arrays: Optional[dict] = None):
        if storage not in ("text", "binary"):
            raise ModelFormatError(f"unknown matrix storage {storage!r}")
        self.storage = storage
        self.arrays = {} if arrays is None else arrays

    def put(self, key: str, arr: np.ndarray):
        arr = np.asarray(arr)
        if self.storage == "text":
            return {"dtype": str(arr.dtype), "shape": list(arr.shape), "data": arr.ravel().tolist()}
        self.arrays[key] = arr
        return {"ref": key}

    def get(self, obj) -> np.ndarray:
        if "ref" in obj:
            try:
                return np.asarray(self.arrays[obj["ref"]])
            except KeyError as exc:
                raise ModelFormatError(f"side-car is missing array {obj['ref']!r}") from exc
        return np.asarray(obj["data"], dtype=obj["dtype"]).reshape(obj["shape"])


def _layer_to(layer: SortLayer, key: str, mats: _Matrices) -> dict:
    return {"N": layer.N, "V": layer.V, "q": layer.q, "frozen": layer.frozen,
            "winners": layer.winners, "penalty_position": layer.penalty_position,
            "orderings": mats.put(key + ".orderings", layer.orderings),
            "accumulators": mats.put(key + ".acc", layer.acc)}


def _layer_from(d: dict, mats: _Matrices) -> SortLayer:
    layer = SortLayer(mats.get(d["orderings"]), mats.get(d["accumulators"]), q=d["q"],
                      frozen=d["frozen"], winners=d["winners"],
                      penalty_position=d["penalty_position"])
    if (layer.N, layer.V) != (d["N"], d["V"]):
        raise ModelFormatError("layer header dimensions do not match its matrices")
    return layer


def _pipeline_to(p: EncodingPipeline, key: str, mats: _Matrices) -> dict:
    d = {"input_dim": p.input_dim, "poly_degree": p.poly_degree, "native": p.native}
    if not p.native:
        d["scaler"] = {"means": mats.put(key + ".means", p.scaler.means),
                       "stds": mats.put(key + ".stds", p.scaler.stds)}
        d["projection"] = {"strategy": p.projection.strategy,
                           "entries": mats.put(key + ".W", p.projection.entries)}
    return d


def _pipeline_from(d: dict, mats: _Matrices) -> EncodingPipeline:
    if d["native"]:
        return EncodingPipeline(d["input_dim"])
    scaler = ScalerStats(mats.get(d["scaler"]["means"]), mats.get(d["scaler"]["stds"]))
    proj = ProjectionMatrix(mats.get(d["projection"]["entries"]), d["projection"]["strategy"])
    return EncodingPipeline(d["input_dim"], d["poly_degree"], scaler, proj)


def _plain(cfg) -> dict:
    return {f.name: (list(v) if isinstance(v := getattr(cfg, f.name), tuple) else v)
            for f in fields(cfg)}


def log_digest(views) -> str:
    h = hashlib.sha256()
    for v in views:
        for t, eta, err in v.train_log:
            h.update(f"{t},{eta!r},{err!r};".encode())
    return h.hexdigest()


def save_model(model: EnsembleModel, path, run_config: Optional[dict] = None,
               extra: Optional[dict] = None, storage: str = "binary") -> Path:
    path = Path(path)
    mats = _Matrices(storage)
    views = []
    for k, v in enumerate(model.views):
        views.append({
            "strategy": v.strategy,
            "pipeline": _pipeline_to(v.pipeline, f"v{k}.enc", mats),
            "network": {"config": _plain(v.network.config),
                        "layers": [_layer_to(l, f"v{k}.l{i}", mats)
                                   for i, l in enumerate(v.network.layers)]},
        })
    header = {"format": FORMAT, "version": VERSION, "matrix_storage": storage,
              "classes": model.classes, "ensemble_config": _plain(model.config),
              "run_config": run_config, "extra": extra or {},
              "train_log_digest": log_digest(model.views), "views": views}
    if storage == "binary":
        sidecar = path.with_name(path.name + ".npz")
        np.savez(sidecar, **mats.arrays)
        header["sidecar"] = sidecar.name
    path.write_text(json.dumps(header))
    return path


def load_model(path) -> tuple[EnsembleModel, dict]:
    """Returns the model and the raw JSON header."""
    path = Path(path)
    try:
        header = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    if header.get("format") != FORMAT:
        raise ModelFormatError("not an arrowflow model file")
    if header.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {header.get('version')}")
    arrays = None
    if header["matrix_storage"] == "binary":
        with np.load(path.with_name(header["sidecar"])) as z:
            arrays = {k: z[k] for k in z.files}
    mats = _Matrices(header["matrix_storage"], arrays)
    views = []
    for v in header["views"]:
        ncfg = NetworkConfig(**v["network"]["config"])
        net = Network([_layer_from(l, mats) for l in v["network"]["layers"]], ncfg)
        net.check()
        views.append(View(_pipeline_from(v["pipeline"], mats), net, v["strategy"]))
    model = EnsembleModel(views, EnsembleConfig(**header["ensemble_config"]), header["classes"])
    return model, header
