"""Report assembly and serialization (JSON and text)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .algebra import VerificationReport

SCHEMA = "prostar-report-v1"
VERSION = "0.1.0"


@dataclass
class TaskResult:
    name: str
    kind: str
    outcome: str  # pass | fail | error
    residuals: list[dict] = field(default_factory=list)
    dimensions: dict = field(default_factory=dict)
    message: str = ""
    timing_s: float = 0.0

    def add_report(self, report: VerificationReport, prefix: str = "") -> None:
        for c in report.checks:
            name = f"{prefix}{c.name}" if not prefix or prefix.endswith(" ") else f"{prefix}: {c.name}"
            self.residuals.append(
                {
                    "name": name,
                    "value": float(c.residual),
                    "threshold": float(c.threshold),
                    "passed": bool(c.passed),
                    **({"detail": c.detail} if c.detail else {}),
                }
            )

    @property
    def passed(self) -> bool:
        return self.outcome == "pass"


@dataclass
class Report:
    config: dict
    tasks: list[TaskResult] = field(default_factory=list)

    @property
    def outcome(self) -> str:
        if any(t.outcome == "error" for t in self.tasks):
            return "error"
        if any(t.outcome == "fail" for t in self.tasks):
            return "fail"
        return "pass"

    @property
    def exit_status(self) -> int:
        if any(t.outcome == "error" for t in self.tasks):
            return 3
        if any(t.outcome == "fail" for t in self.tasks):
            return 1
        return 0

    def to_dict(self, *, include_timing: bool = True) -> dict:
        tasks = []
        for t in self.tasks:
            entry = {
                "name": t.name,
                "kind": t.kind,
                "outcome": t.outcome,
                "dimensions": t.dimensions,
                "residuals": t.residuals,
            }
            if t.message:
                entry["message"] = t.message
            if include_timing:
                entry["timing_s"] = t.timing_s
            tasks.append(entry)
        return {
            "schema": SCHEMA,
            "config": self.config,
            "outcome": self.outcome,
            "exit_status": self.exit_status,
            "tasks": tasks,
        }

    def to_json(self, *, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing), indent=2, sort_keys=True)

    def to_text(self, *, color: bool = False) -> str:
        def paint(s: str, ok: bool) -> str:
            if not color:
                return s
            code = "32" if ok else "31"
            return f"\x1b[{code}m{s}\x1b[0m"

        lines = []
        lines.append(f"prostar report ({VERSION})")
        cfg = ", ".join(f"{k}={v}" for k, v in sorted(self.config.items()))
        lines.append(f"config: {cfg}")
        for t in self.tasks:
            mark = paint(t.outcome.upper(), t.outcome == "pass")
            lines.append(f"task {t.name} [{t.kind}]: {mark}  ({t.timing_s:.3f}s)")
            if t.message:
                lines.append(f"  note: {t.message}")
            for k, v in sorted(t.dimensions.items()):
                lines.append(f"  dim {k} = {v}")
            for r in t.residuals:
                mark = paint("ok" if r["passed"] else "FAIL", r["passed"])
                detail = f"  [{r['detail']}]" if r.get("detail") else ""
                lines.append(
                    f"  [{mark}] {r['name']}: {r['value']:.17g}"
                    f" (threshold {r['threshold']:.17g}){detail}"
                )
        lines.append(f"overall: {paint(self.outcome.upper(), self.outcome == 'pass')}")
        return "\n".join(lines) + "\n"
