"""Score explainer coefficients against ground-truth coefficients.

Distance accuracy (normalized Euclidean distance and its complement),
order accuracy (Second Correct / All Correct), implementation invariance
(paired t-test on per-instance distances), and a zero-coefficient census.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IncompatibilityError
from .explainer import CoefficientMatrix
from .numerics import TTestResult, minmax_normalize, paired_t_test

INVARIANCE_P_THRESHOLD = 0.1


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def c_of_ed(distances: np.ndarray) -> np.ndarray:
    """Complement of the min-max normalized distances.

    Normalization uses one min/max over the whole tensor (one evaluation =
    one dataset + parameter setting), so 1.0 marks the best distance seen in
    the evaluation and 0.0 the worst.  A constant tensor maps to all 1.0.
    """
    distances = np.asarray(distances, dtype=float)
    return (1.0 - minmax_normalize(distances.ravel())).reshape(distances.shape)


def rank_features(coeffs, rank_by: str = "absolute") -> np.ndarray:
    """Feature indices by descending importance; ties by ascending index."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        raise ValueError("empty coefficient vector")
    if not np.all(np.isfinite(c)):
        raise ValueError(f"non-finite coefficient in {c}")
    key = np.abs(c) if rank_by == "absolute" else c
    return np.lexsort((np.arange(c.size), -key))


def order_correct(gte_rank, exp_rank) -> tuple[int, int]:
    g = np.asarray(gte_rank)
    e = np.asarray(exp_rank)
    if g.shape != e.shape or sorted(g) != list(range(g.size)) or sorted(e) != list(range(e.size)):
        raise ValueError("rankings must be equal-length permutations of 0..d-1")
    all_c = int(np.array_equal(g, e))
    second_c = int(g.size < 2 or g[1] == e[1])
    return second_c, all_c


def implementation_invariance(ed_a, ed_b) -> tuple[TTestResult, bool]:
    """Paired t-test on per-instance mean distances of two models; the
    invariance hypothesis survives when p exceeds 0.1."""
    res = paired_t_test(ed_a, ed_b)
    return res, res.p_value > INVARIANCE_P_THRESHOLD


def zero_census(matrix: CoefficientMatrix, tolerance: float = 0.0):
    """Per-feature counts and rates of |coefficient| <= tolerance over all
    runs x instances."""
    coef = matrix.coefficients
    runs, n, d = coef.shape
    counts = (np.abs(coef) <= tolerance).sum(axis=(0, 1))
    return counts.astype(int), counts / float(runs * n)


@dataclass
class InstanceScore:
    instance_id: int
    mean_ed: float
    std_ed: float
    mean_c_of_ed: float
    std_c_of_ed: float
    second_correct: float
    all_correct: float


@dataclass
class EvalReport:
    instance_scores: list[InstanceScore]
    ave_c_of_ed: float
    ave_second: float
    ave_all: float
    invariance: TTestResult | None
    invariance_not_rejected: bool | None
    zero_counts_exp: list[int]
    zero_rates_exp: list[float]
    zero_counts_gte: list[int]
    zero_rates_gte: list[float]
    exp_config_hash: str
    gte_config_hash: str
    dataset_hash: str
    runs: int
    n_features: int

    def to_dict(self) -> dict:
        d = {
            "ave_c_of_ed": self.ave_c_of_ed,
            "ave_second": self.ave_second,
            "ave_all": self.ave_all,
            "invariance": None
            if self.invariance is None
            else {
                "t_statistic": self.invariance.t_statistic,
                "degrees_of_freedom": self.invariance.degrees_of_freedom,
                "p_value": self.invariance.p_value,
                "kind": self.invariance.kind,
                "not_rejected": self.invariance_not_rejected,
            },
            "zero_counts_exp": self.zero_counts_exp,
            "zero_rates_exp": self.zero_rates_exp,
            "zero_counts_gte": self.zero_counts_gte,
            "zero_rates_gte": self.zero_rates_gte,
            "exp_config_hash": self.exp_config_hash,
            "gte_config_hash": self.gte_config_hash,
            "dataset_hash": self.dataset_hash,
            "runs": self.runs,
            "n_features": self.n_features,
            "instances": [vars(s) for s in self.instance_scores],
        }
        return d

    def save(self, out_dir: str | Path, dataset_name: str = "dataset") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        lines = ["instance_id,mean_ed,std_ed,mean_c_of_ed,std_c_of_ed,second_correct,all_correct"]
        for s in self.instance_scores:
            lines.append(
                f"{s.instance_id},{s.mean_ed!r},{s.std_ed!r},{s.mean_c_of_ed!r},"
                f"{s.std_c_of_ed!r},{s.second_correct!r},{s.all_correct!r}"
            )
        (out / "per_instance.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (out / "summary.csv").write_text(
            "dataset,ave_c_of_ed,ave_second,ave_all\n"
            f"{dataset_name},{self.ave_c_of_ed!r},{self.ave_second!r},{self.ave_all!r}\n",
            encoding="utf-8",
        )

    @staticmethod
    def load(out_dir: str | Path) -> "EvalReport":
        doc = json.loads((Path(out_dir) / "report.json").read_text(encoding="utf-8"))
        inv = doc["invariance"]
        return EvalReport(
            instance_scores=[InstanceScore(**s) for s in doc["instances"]],
            ave_c_of_ed=doc["ave_c_of_ed"],
            ave_second=doc["ave_second"],
            ave_all=doc["ave_all"],
            invariance=None
            if inv is None
            else TTestResult(inv["t_statistic"], inv["degrees_of_freedom"], inv["p_value"], inv["kind"]),
            invariance_not_rejected=None if inv is None else inv["not_rejected"],
            zero_counts_exp=doc["zero_counts_exp"],
            zero_rates_exp=doc["zero_rates_exp"],
            zero_counts_gte=doc["zero_counts_gte"],
            zero_rates_gte=doc["zero_rates_gte"],
            exp_config_hash=doc["exp_config_hash"],
            gte_config_hash=doc["gte_config_hash"],
            dataset_hash=doc["dataset_hash"],
            runs=doc["runs"],
            n_features=doc["n_features"],
        )


def _check_compatible(a: CoefficientMatrix, b: CoefficientMatrix) -> None:
    if a.shape != b.shape:
        raise IncompatibilityError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.dataset_hash != b.dataset_hash:
        raise IncompatibilityError(
            f"dataset hash mismatch: {a.dataset_hash!r} vs {b.dataset_hash!r}"
        )


def build_report(
    exp: CoefficientMatrix,
    gte: CoefficientMatrix,
    second_exp: CoefficientMatrix | None = None,
    rank_by: str = "absolute",
    zero_tolerance: float = 0.0,
) -> EvalReport:
    _check_compatible(exp, gte)
    if second_exp is not None:
        _check_compatible(second_exp, gte)
    runs, n, d = exp.shape

    ed = np.linalg.norm(exp.coefficients - gte.coefficients, axis=2)  # runs x n
    comp = c_of_ed(ed)
    second = np.zeros((runs, n))
    allc = np.zeros((runs, n))
    for r in range(runs):
        for i in range(n):
            g_rank = rank_features(gte.coefficients[r, i], rank_by)
            e_rank = rank_features(exp.coefficients[r, i], rank_by)
            second[r, i], allc[r, i] = order_correct(g_rank, e_rank)

    scores = [
        InstanceScore(
            instance_id=int(exp.instance_ids[i]),
            mean_ed=float(ed[:, i].mean()),
            std_ed=float(ed[:, i].std()),
            mean_c_of_ed=float(comp[:, i].mean()),
            std_c_of_ed=float(comp[:, i].std()),
            second_correct=float(second[:, i].mean()),
            all_correct=float(allc[:, i].mean()),
        )
        for i in range(n)
    ]

    invariance = None
    not_rejected = None
    if second_exp is not None:
        ed_b = np.linalg.norm(second_exp.coefficients - gte.coefficients, axis=2)
        invariance, not_rejected = implementation_invariance(ed.mean(axis=0), ed_b.mean(axis=0))

    zc_e, zr_e = zero_census(exp, zero_tolerance)
    zc_g, zr_g = zero_census(gte, zero_tolerance)
    return EvalReport(
        instance_scores=scores,
        ave_c_of_ed=float(np.mean([s.mean_c_of_ed for s in scores])),
        ave_second=float(np.mean([s.second_correct for s in scores])),
        ave_all=float(np.mean([s.all_correct for s in scores])),
        invariance=invariance,
        invariance_not_rejected=not_rejected,
        zero_counts_exp=zc_e.tolist(),
        zero_rates_exp=zr_e.tolist(),
        zero_counts_gte=zc_g.tolist(),
        zero_rates_gte=zr_g.tolist(),
        exp_config_hash=exp.config_hash,
        gte_config_hash=gte.config_hash,
        dataset_hash=exp.dataset_hash,
        runs=runs,
        n_features=d,
    )
