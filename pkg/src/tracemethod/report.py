"""Machine-readable run report."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import __version__
from .trace_method import DeltaReport, EpsilonDecision, InferenceResult, TestResult, Verdict

SCHEMA_VERSION = "1"


@dataclass
class RunReport:
    inputs: dict
    deltas: DeltaReport
    test: TestResult
    epsilon: EpsilonDecision
    seed: int
    timing: Optional[dict] = None
    version: str = __version__
    schema_version: str = SCHEMA_VERSION

    @classmethod
    def from_result(cls, result: InferenceResult, epsilon: EpsilonDecision, inputs: dict, seed: int, timing=None):
        return cls(inputs=inputs, deltas=result.deltas, test=result.test, epsilon=epsilon, seed=seed, timing=timing)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["test"]["verdict"] = self.test.verdict.value
        d["test"]["message"] = self.test.verdict.message
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        t = dict(d["test"])
        t.pop("message", None)
        t["verdict"] = Verdict(t["verdict"])
        return cls(
            inputs=d["inputs"],
            deltas=DeltaReport(**d["deltas"]),
            test=TestResult(**t),
            epsilon=EpsilonDecision(**d["epsilon"]),
            seed=d["seed"],
            timing=d.get("timing"),
            version=d["version"],
            schema_version=d["schema_version"],
        )

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        dl, t, e = self.deltas, self.test, self.epsilon
        lines = [
            t.verdict.message,
            f"n={self.inputs['n']} m={self.inputs['m']} k={self.inputs['k']} "
            f"alpha={t.alpha} rotations={self.inputs['rotations']} seed={self.seed}",
            f"X->Y: delta={dl.delta_xy:.6g} p={t.p_xy:.6g} rank={dl.rank_xy}",
            f"Y->X: delta={dl.delta_yx:.6g} p={t.p_yx:.6g} rank={dl.rank_yx}",
            f"epsilon rule (eps={e.epsilon}): {e.chosen}",
        ]
        if self.timing:
            lines.append(f"elapsed: {self.timing['seconds']:.3f} s")
        return "\n".join(lines) + "\n"
