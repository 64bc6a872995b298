"""Per-request metrics records, windowed aggregation and CSV output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

from .kernel import PS_PER_S

REQUEST_COLUMNS = ["request_id", "initiator", "responder", "start_s", "served", "tts_ms",
                   "fidelity", "path_hops", "strategy"]
SUMMARY_COLUMNS = ["window_start_s", "window_end_s", "mean_tts_ms", "mean_fidelity", "served_fraction"]


@dataclass(frozen=True)
class MetricsRecord:
    request_id: int
    initiator: str
    responder: str
    start_s: float
    tts_s: float | None
    fidelity: float | None
    path_hops: int
    strategy: str

    @property
    def served(self) -> bool:
        return self.tts_s is not None

    @property
    def tts_ms(self) -> float | None:
        return None if self.tts_s is None else self.tts_s * 1e3


def record_metrics(request, completion: int | None, fidelity: float | None, path_hops: int,
                   strategy: str) -> MetricsRecord:
    """TTS = completion - start, only when completion lies inside [start, end]."""
    served = completion is not None and request.start <= completion <= request.end
    return MetricsRecord(
        request.id, request.initiator, request.responder, request.start / PS_PER_S,
        (completion - request.start) / PS_PER_S if served else None,
        fidelity if served else None, path_hops, strategy,
    )


def _mean(xs: list[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def mean_tts_ms(records: list[MetricsRecord]) -> float | None:
    return _mean([r.tts_ms for r in records if r.served])


def mean_fidelity(records: list[MetricsRecord]) -> float | None:
    return _mean([r.fidelity for r in records if r.served])


@dataclass(frozen=True)
class Window:
    start_s: float
    end_s: float
    mean_tts_ms: float | None
    mean_fidelity: float | None
    served_fraction: float
    count: int


def windows(records: list[MetricsRecord], width_s: float, duration_s: float | None = None) -> list[Window]:
    """Aggregate by request start time into consecutive windows of ``width_s``."""
    if not records:
        return []
    horizon = duration_s if duration_s is not None else max(r.start_s for r in records) + 1e-9
    n = max(1, math.ceil(horizon / width_s - 1e-9))
    buckets: list[list[MetricsRecord]] = [[] for _ in range(n)]
    for r in records:
        k = min(int(r.start_s // width_s), n - 1)
        buckets[k].append(r)
    out = []
    for k, rs in enumerate(buckets):
        served = [r for r in rs if r.served]
        out.append(Window(k * width_s, (k + 1) * width_s, mean_tts_ms(rs), mean_fidelity(rs),
                          len(served) / len(rs) if rs else 0.0, len(rs)))
    return out


def _fmt(x: float | None, digits: int = 6) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def requests_csv(records: list[MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REQUEST_COLUMNS)
    for r in sorted(records, key=lambda r: r.request_id):
        w.writerow([r.request_id, r.initiator, r.responder, _fmt(r.start_s), int(r.served),
                    _fmt(r.tts_ms), _fmt(r.fidelity), r.path_hops, r.strategy])
    return buf.getvalue()


def summary_csv(wins: list[Window]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for win in wins:
        w.writerow([_fmt(win.start_s, 3), _fmt(win.end_s, 3), _fmt(win.mean_tts_ms),
                    _fmt(win.mean_fidelity), _fmt(win.served_fraction, 4)])
    return buf.getvalue()


def write_outputs(out_dir: Path, records: list[MetricsRecord], wins: list[Window]) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    req_path, sum_path = out_dir / "requests.csv", out_dir / "summary.csv"
    req_path.write_text(requests_csv(records))
    sum_path.write_text(summary_csv(wins))
    return req_path, sum_path
