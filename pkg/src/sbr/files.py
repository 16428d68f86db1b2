"""JSON file formats.

Instance file::

    {"format": "sbr-instance", "version": 1,
     "shape": {"M": 6, "N": 4, "pairs": [[1, 2], ...]},
     "truth": {"entries": [[index, weight], ...], "patterns": ["012301", ...]} | null,
     "marginals": [[[y(p, 0, 0), ...], ...], ...]}   # one N x N block per pair, pair order

Sparse vector payloads always carry ``entries`` as ``[index, weight]`` and a
parallel ``patterns`` list of occupation labels.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import MeasurementVector, ProblemShape, SparseVector, decode_index
from .oracle import JointDistribution

INSTANCE_FORMAT = "sbr-instance"
VERSION = 1
SPARSE_DENSITY_THRESHOLD = 0.25


class InstanceFormatError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory so failures leave no partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sparse_to_json(x: SparseVector, shape: ProblemShape) -> dict:
    return {
        "entries": [[i, w] for i, w in x.entries()],
        "patterns": [decode_index(i, shape).label() for i in x.indices],
    }


def sparse_from_json(obj, shape: ProblemShape) -> SparseVector:
    entries = obj["entries"] if isinstance(obj, dict) else obj
    pairs = []
    for e in entries:
        if len(e) != 2:
            raise InstanceFormatError(f"sparse entry must be [index, weight], got {e!r}")
        if int(e[0]) != e[0]:
            raise InstanceFormatError(f"non-integer index {e[0]!r}")
        pairs.append((int(e[0]), float(e[1])))
    x = SparseVector(tuple(i for i, _ in pairs), np.array([w for _, w in pairs]))
    x.check_range(shape)
    return x


def measurement_to_json(y: MeasurementVector) -> list:
    return y.blocks.tolist()


def measurement_from_json(obj, shape: ProblemShape) -> MeasurementVector:
    arr = np.array(obj, dtype=np.float64)
    n = shape.levels
    if arr.shape != (len(shape.pairs), n, n):
        raise InstanceFormatError(f"marginal blocks have shape {arr.shape}, expected {(len(shape.pairs), n, n)}")
    return MeasurementVector(shape, arr)


@dataclass(frozen=True)
class InstanceFile:
    shape: ProblemShape
    marginals: MeasurementVector
    truth: SparseVector | None = None

    def to_json(self) -> dict:
        return {
            "format": INSTANCE_FORMAT,
            "version": VERSION,
            "shape": self.shape.to_json(),
            "truth": None if self.truth is None else sparse_to_json(self.truth, self.shape),
            "marginals": measurement_to_json(self.marginals),
        }

    @classmethod
    def from_json(cls, obj) -> "InstanceFile":
        try:
            if obj.get("format") != INSTANCE_FORMAT:
                raise InstanceFormatError(f"not an {INSTANCE_FORMAT} file")
            shape = ProblemShape.from_json(obj["shape"])
            marginals = measurement_from_json(obj["marginals"], shape)
            truth = None if obj.get("truth") is None else sparse_from_json(obj["truth"], shape)
        except InstanceFormatError:
            raise
        except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
            raise InstanceFormatError(f"malformed instance: {exc}") from exc
        return cls(shape, marginals, truth)


def write_instance(inst: InstanceFile, path) -> None:
    atomic_write(path, dumps(inst.to_json()))


def read_instance(path) -> InstanceFile:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from exc
    return InstanceFile.from_json(obj)


def joint_to_json(joint: JointDistribution) -> dict:
    """Sparse entry list when at most a quarter of the entries are nonzero, dense list otherwise."""
    out = {
        "shape": joint.shape.to_json(),
        "photons": joint.photons,
        "truncated_mass": joint.truncated_mass,
        "total": joint.total(),
    }
    nz = np.count_nonzero(joint.probabilities)
    if nz <= SPARSE_DENSITY_THRESHOLD * joint.probabilities.size:
        out["format"] = "sparse"
        out.update(sparse_to_json(joint.as_sparse(), joint.shape))
    else:
        out["format"] = "dense"
        out["probabilities"] = joint.probabilities.tolist()
    return out


def joint_from_json(obj) -> JointDistribution:
    shape = ProblemShape.from_json(obj["shape"])
    if obj["format"] == "sparse":
        probs = sparse_from_json(obj, shape).to_dense(shape)
    else:
        probs = np.array(obj["probabilities"], dtype=np.float64)
    return JointDistribution(shape, probs, float(obj["truncated_mass"]), int(obj["photons"]))
