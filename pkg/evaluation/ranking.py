# evaluation/ranking.py

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy.stats import rankdata

TIE_POLICIES = {"fractional": "average", "min": "min"}
HIGHER_BETTER = "^"
LOWER_BETTER = "v"


@dataclass
class RankTable:
    """Methods × metric columns, each column lower- or higher-is-better."""
    methods: List[str]
    columns: List[str]
    higher_better: List[bool]
    scores: np.ndarray

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (len(self.methods), len(self.columns)):
            raise ValueError(
                f"score matrix {self.scores.shape} does not match "
                f"{len(self.methods)} methods × {len(self.columns)} columns"
            )
        if len(self.higher_better) != len(self.columns):
            raise ValueError(f"{len(self.higher_better)} directions for {len(self.columns)} columns")
        if np.isnan(self.scores).any():
            raise ValueError("rank table has missing cells")


def parse_header_cell(cell: str) -> Tuple[str, bool]:
    """`name ^` → higher-better, `name v` → lower-better."""
    name, _, marker = cell.strip().rpartition(" ")
    if marker == HIGHER_BETTER:
        return name.strip(), True
    if marker == LOWER_BETTER:
        return name.strip(), False
    raise ValueError(f"column {cell!r} must end with ' {HIGHER_BETTER}' or ' {LOWER_BETTER}'")


def read_rank_csv(path: Union[str, Path]) -> RankTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"rank table not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ValueError(f"{path} needs a header row and at least one method")

    header = rows[0]
    parsed = [parse_header_cell(cell) for cell in header[1:]]
    methods, scores = [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}")
        methods.append(row[0].strip())
        try:
            scores.append([float(cell) for cell in row[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: {exc}") from exc
    return RankTable(
        methods=methods,
        columns=[name for name, _ in parsed],
        higher_better=[hb for _, hb in parsed],
        scores=np.array(scores),
    )


def rank_columns(table: RankTable, tie_policy: str = "fractional") -> np.ndarray:
    """Per-column ranks (1 = best) under the chosen tie policy."""
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie_policy!r}; expected one of {sorted(TIE_POLICIES)}")
    oriented = np.where(table.higher_better, -table.scores, table.scores)
    return rankdata(oriented, method=TIE_POLICIES[tie_policy], axis=0).astype(np.float64)


def avg_rank(table: RankTable, tie_policy: str = "fractional") -> Dict[str, float]:
    """Mean column rank per method, recomputed from the score cells; a published average-rank column is never copied."""
    ranks = rank_columns(table, tie_policy)
    return {method: float(r) for method, r in zip(table.methods, ranks.mean(axis=1))}


def ranked_order(averages: Dict[str, float]) -> List[str]:
    return sorted(averages, key=lambda m: (averages[m], m))


def write_ranked_csv(path: Union[str, Path], table: RankTable, tie_policy: str = "fractional") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ranks = rank_columns(table, tie_policy)
    averages = avg_rank(table, tie_policy)
    index = {m: i for i, m in enumerate(table.methods)}
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method"] + [f"rank {c}" for c in table.columns] + ["avg_rank", "avg_rank_1dp"])
        for method in ranked_order(averages):
            row = ranks[index[method]]
            writer.writerow(
                [method] + [f"{r:g}" for r in row] + [f"{averages[method]:.4f}", f"{averages[method]:.1f}"]
            )
    return path


def generate_rank_report(table: RankTable, tie_policy: str = "fractional", title: str = "AVERAGE RANK REPORT") -> str:
    """
    Formatted text report: one line per method, best first.
    """
    averages = avg_rank(table, tie_policy)
    ranks = rank_columns(table, tie_policy)
    index = {m: i for i, m in enumerate(table.methods)}

    report = "\n" + "=" * 80 + "\n"
    report += f"📊 {title}\n"
    report += "=" * 80 + "\n\n"
    report += f"{len(table.methods)} methods × {len(table.columns)} metrics, tie policy: {tie_policy}\n\n"

    for position, method in enumerate(ranked_order(averages), start=1):
        per_column = " ".join(f"{r:>4g}" for r in ranks[index[method]])
        report += f"{'#' + str(position):>4} | {method:<24} | Avg. Rank: {averages[method]:5.1f} ({averages[method]:.4f})\n"
        report += f"     | ranks: {per_column}\n"
        report += "-" * 80 + "\n"

    report += "\nCOLUMNS:\n"
    for name, hb in zip(table.columns, table.higher_better):
        report += f"  • {name} ({'higher' if hb else 'lower'} is better)\n"
    report += "=" * 80 + "\n"
    return report
