"""Operation counts and 45nm energy estimates: sort layers vs FP32 MLP layers.

All arithmetic is exact (``Fraction``); rounding happens only when a table
is rendered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

F = Fraction


@dataclass(frozen=True)
class EnergyModel:
    """Picojoules per operation (Horowitz, ISSCC 2014)."""

    int8_add: Fraction = F("0.03")
    int32_add_cmp: Fraction = F("0.1")
    int32_mul: Fraction = F("3.1")
    fp32_add: Fraction = F("0.9")
    fp32_mul: Fraction = F("3.7")
    fp32_mac: Fraction = F("4.6")
    sram_read32: Fraction = F(5)
    dram_read32: Fraction = F(640)

    def int_rate(self, width: int) -> Fraction:
        if width == 8:
            return self.int8_add
        if width == 32:
            return self.int32_add_cmp
        raise ValueError("int width must be 8 or 32")


DEFAULT_MODEL = EnergyModel()

# Majority-vote cost per view, in int32 ops: 100 ops/view gives the ~70 pJ
# quoted for 7 views.
VOTE_OPS_PER_VIEW = 100


@dataclass
class EnergyProfile:
    """Rows of ``(component, op_count, pJ_per_op)``; totals are exact."""

    name: str
    rows: list = field(default_factory=list)

    def add(self, component: str, count: int, rate: Fraction) -> None:
        self.rows.append((component, int(count), Fraction(rate)))

    @property
    def ops(self) -> int:
        return sum(c for _, c, _ in self.rows)

    @property
    def energy(self) -> Fraction:
        return sum((c * r for _, c, r in self.rows), Fraction(0))

    def counts(self) -> dict:
        out = {}
        for comp, c, _ in self.rows:
            out[comp] = out.get(comp, 0) + c
        return out

    def scaled(self, k: int, name: str | None = None) -> "EnergyProfile":
        return EnergyProfile(name or self.name, [(c, n * k, r) for c, n, r in self.rows])

    def __add__(self, other: "EnergyProfile") -> "EnergyProfile":
        return EnergyProfile(self.name, self.rows + other.rows)


def argsort_ops(N: int) -> int:
    return N * math.ceil(math.log2(N)) if N > 1 else 0


def profile_sort_layer(N: int, V: int, int_width: int = 32,
                       model: EnergyModel = DEFAULT_MODEL) -> EnergyProfile:
    """``3NV`` displacement ops plus ``N ceil(log2 N)`` comparisons."""
    if N < 1 or V < 1:
        raise ValueError("N and V must be >= 1")
    rate = model.int_rate(int_width)
    p = EnergyProfile(f"sort[N={N},V={V}]")
    p.add("displacement", 3 * N * V, rate)
    p.add("argsort", argsort_ops(N), rate)
    return p


def profile_mlp_layer(N: int, V: int, model: EnergyModel = DEFAULT_MODEL,
                      bias_activation: bool = True) -> EnergyProfile:
    """``NV`` FP32 MACs plus one bias add and one activation per output."""
    if N < 1 or V < 1:
        raise ValueError("N and V must be >= 1")
    p = EnergyProfile(f"mlp[{V}->{N}]")
    p.add("mac", N * V, model.fp32_mac)
    if bias_activation:
        p.add("bias_activation", 2 * N, model.fp32_add)
    return p


def index_table_ops(V: int) -> int:
    """Input index-table writes; reported separately, not in headline totals."""
    return V


@dataclass
class InferenceComparison:
    arrowflow: EnergyProfile
    mlp: EnergyProfile
    convention: str

    @property
    def ratio(self) -> Fraction:
        return self.mlp.energy / self.arrowflow.energy


def profile_inference(hidden: Sequence[int], V: int, views: int, classes: int,
                      mlp_hidden: Sequence[int] = (128,), convention: str = "published",
                      int_width: int = 32,
                      model: EnergyModel = DEFAULT_MODEL) -> InferenceComparison:
    """Full-inference arithmetic energy of a K-view ensemble vs one MLP.

    ``convention="published"`` reproduces the published accounting: hidden layers
    cost ``3NV`` displacement ops only, the output layer ``3 * V_out`` ops and
    the MLP MACs only.  ``convention="full"`` counts every op of
    ``profile_sort_layer`` / ``profile_mlp_layer`` for every layer.
    """
    if convention not in ("published", "full"):
        raise ValueError("convention must be 'published' or 'full'")
    rate = model.int_rate(int_width)
    view = EnergyProfile("view")
    v_in = V
    for N in hidden:
        if convention == "published":
            view.add(f"sort[{N}]", 3 * N * v_in, rate)
        else:
            for comp, c, r in profile_sort_layer(N, v_in, int_width, model).rows:
                view.add(f"sort[{N}].{comp}", c, r)
        v_in = N
    if convention == "published":
        view.add("output", 3 * v_in, rate)
    else:
        for comp, c, r in profile_sort_layer(classes, v_in, int_width, model).rows:
            view.add(f"output.{comp}", c, r)
    af = view.scaled(views, f"arrowflow[K={views}]")
    af.add("majority_vote", VOTE_OPS_PER_VIEW * views, model.int32_add_cmp)

    mlp = EnergyProfile("mlp")
    m_in = V
    for N in list(mlp_hidden) + [classes]:
        for comp, c, r in profile_mlp_layer(N, m_in, model,
                                            bias_activation=convention == "full").rows:
            mlp.add(f"{m_in}->{N}.{comp}", c, r)
        m_in = N
    return InferenceComparison(af, mlp, convention)


def memory_bytes(N: int, V: int) -> dict:
    """Parameter bytes and one-pass SRAM read energy (8-bit indices vs FP32)."""
    af, mlp = N * V, 4 * N * V
    rate = DEFAULT_MODEL.sram_read32
    return {"arrowflow_bytes": af, "mlp_bytes": mlp,
            "arrowflow_sram_pJ": F(af, 4) * rate, "mlp_sram_pJ": F(mlp, 4) * rate}


def fmt_pj(x: Fraction) -> str:
    return f"{round(x):,}"


def layer_table(N: int = 128, V: int = 64, int_width: int = 32) -> list[tuple]:
    """Rows of the per-layer comparison: ``(component, ops, pJ)``."""
    s = profile_sort_layer(N, V, int_width)
    m = profile_mlp_layer(N, V)
    rows = [(f"sort {c}", n, n * r) for c, n, r in s.rows]
    rows.append(("sort total", s.ops, s.energy))
    rows += [(f"mlp {c}", n, n * r) for c, n, r in m.rows]
    rows.append(("mlp total", m.ops, m.energy))
    rows.append(("ratio mlp/sort", None, m.energy / s.energy))
    return rows
