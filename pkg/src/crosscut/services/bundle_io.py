"""JSON serialization of puzzle and solution bundles.

Floats are written with Python's shortest round-trip repr, so reading a
written bundle gives back the same bits. Every invariant of the domain types
is re-checked on load and failures name the offending field.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np
from packaging import version as pkg_version

from crosscut.errors import BundleFormatError, CrosscutError, FormatVersionError
from crosscut.models import (
    FORMAT_VERSION,
    ConvexPolygon,
    EdgeRef,
    EvalReport,
    GroundTruth,
    Line2,
    Mating,
    NoiseSpec,
    Pose,
    PuzzleBundle,
    SolutionBundle,
    SolverReport,
)
from crosscut.models.geometry import signed_area

logger = logging.getLogger(__name__)

PUZZLE_SUFFIX = ".ccpuzzle"
SOLUTION_SUFFIX = ".ccsol"

Source = Union[str, Path, TextIO]
Bundle = Union[PuzzleBundle, SolutionBundle]


# encoding


def _pose(p: Pose) -> List[float]:
    return [p.angle, p.tx, p.ty]


def _poses(poses: Dict[int, Pose]) -> Dict[str, List[float]]:
    return {str(pid): _pose(poses[pid]) for pid in sorted(poses)}


def _matings(matings) -> List[List[str]]:
    return [[str(m.a), str(m.b)] for m in sorted(matings)]


def _pieces(pieces: Dict[int, ConvexPolygon]) -> List[Dict[str, Any]]:
    return [{"id": pid, "vertices": pieces[pid].vertices.tolist()} for pid in sorted(pieces)]


def puzzle_to_dict(bundle: PuzzleBundle) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "format_version": bundle.format_version,
        "kind": "puzzle",
        "seed": bundle.seed,
        "shape": {"kind": bundle.shape_kind, "vertices": bundle.shape.vertices.tolist()},
        "noise": {
            "xi": bundle.noise.xi,
            "epsilon": bundle.noise.epsilon,
            "diameter": bundle.noise.diameter,
        },
        "pieces": _pieces(bundle.pieces),
    }
    gt = bundle.ground_truth
    if gt is not None:
        doc["ground_truth"] = {
            "poses": _poses(gt.poses),
            "matings": _matings(gt.matings),
            "clean_pieces": _pieces(gt.clean_pieces),
            "boundary_edges": [str(e) for e in sorted(gt.boundary_edges)],
            "cuts": [list(line.as_tuple()) for line in gt.cuts],
            "n_intersections": gt.n_intersections,
            "n_cut_edges": gt.n_cut_edges,
            "cut_length": gt.cut_length,
        }
    return doc


def eval_to_dict(report: EvalReport) -> Dict[str, Any]:
    return {
        "q_positions": report.q_positions,
        "precision": report.precision,
        "recall": report.recall,
        "global_alignment": _pose(report.global_alignment),
        "overlap_ratios": {str(k): v for k, v in sorted(report.overlap_ratios.items())},
    }


def solution_to_dict(solution: SolutionBundle) -> Dict[str, Any]:
    return {
        "format_version": solution.format_version,
        "kind": "solution",
        "matings": _matings(solution.matings),
        "poses": _poses(solution.poses),
        "report": solution.report.to_dict(),
        "evaluation": None if solution.evaluation is None else eval_to_dict(solution.evaluation),
    }


def dumps(bundle: Bundle) -> str:
    if isinstance(bundle, PuzzleBundle):
        doc = puzzle_to_dict(bundle)
    elif isinstance(bundle, SolutionBundle):
        doc = solution_to_dict(bundle)
    else:
        raise TypeError(f"cannot serialize {type(bundle).__name__}")
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_bundle(bundle: Bundle, target: Source) -> None:
    text = dumps(bundle)
    if hasattr(target, "write"):
        target.write(text)  # type: ignore[union-attr]
        return
    path = Path(target)  # type: ignore[arg-type]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.debug("Wrote %s", path)


# decoding


class _Field:
    """A JSON value together with its path, for error messages."""

    def __init__(self, value: Any, path: str):
        self.value = value
        self.path = path

    def fail(self, message: str) -> BundleFormatError:
        return BundleFormatError(f"{self.path}: {message}")

    def get(self, key: str, required: bool = True) -> "_Field":
        if not isinstance(self.value, dict):
            raise self.fail("expected an object")
        if key not in self.value:
            if required:
                raise BundleFormatError(f"{self.path}.{key}: missing")
            return _Field(None, f"{self.path}.{key}")
        return _Field(self.value[key], f"{self.path}.{key}")

    def items(self) -> List["_Field"]:
        if not isinstance(self.value, list):
            raise self.fail("expected a list")
        return [_Field(v, f"{self.path}[{i}]") for i, v in enumerate(self.value)]

    def number(self, optional: bool = False) -> Optional[float]:
        if self.value is None and optional:
            return None
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise self.fail("expected a number")
        return float(self.value)

    def integer(self, optional: bool = False) -> Optional[int]:
        if self.value is None and optional:
            return None
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise self.fail("expected an integer")
        return self.value

    def string(self) -> str:
        if not isinstance(self.value, str):
            raise self.fail("expected a string")
        return self.value

    def mapping(self) -> Dict[str, "_Field"]:
        if not isinstance(self.value, dict):
            raise self.fail("expected an object")
        return {k: _Field(v, f"{self.path}.{k}") for k, v in self.value.items()}


def _check_version(doc: _Field) -> str:
    field = doc.get("format_version")
    raw = field.string()
    try:
        found = pkg_version.Version(raw)
    except pkg_version.InvalidVersion as e:
        raise FormatVersionError(f"{field.path}: invalid version {raw!r}") from e
    supported = pkg_version.Version(FORMAT_VERSION)
    if found.major != supported.major:
        raise FormatVersionError(
            f"{field.path}: format {raw} is not readable (supported: {FORMAT_VERSION}.x)"
        )
    return raw


def _vertices(field: _Field) -> ConvexPolygon:
    points = []
    for p in field.items():
        coords = p.items()
        if len(coords) != 2:
            raise p.fail("expected [x, y]")
        points.append([coords[0].number(), coords[1].number()])
    if len(points) >= 3 and signed_area(np.asarray(points, dtype=float)) > 0:
        raise field.fail("vertices must be listed clockwise")
    try:
        return ConvexPolygon(points)
    except CrosscutError as e:
        raise field.fail(str(e)) from e


def _edge_ref(field: _Field) -> EdgeRef:
    text = field.string()
    try:
        pid, j = text.split(":")
        return EdgeRef(int(pid), int(j))
    except ValueError as e:
        raise field.fail(f"expected 'piece:edge', got {text!r}") from e


def _read_matings(field: _Field) -> frozenset:
    out = []
    for pair in field.items():
        ends = pair.items()
        if len(ends) != 2:
            raise pair.fail("a mating has two edges")
        try:
            out.append(Mating(_edge_ref(ends[0]), _edge_ref(ends[1])))
        except CrosscutError as e:
            raise pair.fail(str(e)) from e
    return frozenset(out)


def _read_pose(field: _Field) -> Pose:
    parts = field.items()
    if len(parts) != 3:
        raise field.fail("expected [angle, tx, ty]")
    return Pose(parts[0].number(), parts[1].number(), parts[2].number())


def _read_poses(field: _Field) -> Dict[int, Pose]:
    poses = {}
    for key, value in field.mapping().items():
        try:
            pid = int(key)
        except ValueError as e:
            raise value.fail("piece ids must be integers") from e
        poses[pid] = _read_pose(value)
    return poses


def _read_pieces(field: _Field) -> Dict[int, ConvexPolygon]:
    pieces: Dict[int, ConvexPolygon] = {}
    for entry in field.items():
        pid = entry.get("id").integer()
        if pid in pieces:
            raise entry.fail(f"duplicate piece id {pid}")
        pieces[pid] = _vertices(entry.get("vertices"))
    return pieces


def _guarded(field: _Field, build):
    try:
        return build()
    except BundleFormatError:
        raise
    except CrosscutError as e:
        raise field.fail(str(e)) from e


def puzzle_from_dict(doc: _Field) -> PuzzleBundle:
    version = _check_version(doc)
    shape = doc.get("shape")
    noise = doc.get("noise")
    ns = _guarded(
        noise,
        lambda: NoiseSpec(
            xi=noise.get("xi").number(),
            epsilon=noise.get("epsilon").number(),
            diameter=noise.get("diameter").number(),
        ),
    )
    pieces = _read_pieces(doc.get("pieces"))
    gt_field = doc.get("ground_truth", required=False)
    gt = None
    if gt_field.value is not None:
        gt = _guarded(
            gt_field,
            lambda: GroundTruth(
                matings=_read_matings(gt_field.get("matings")),
                poses=_read_poses(gt_field.get("poses")),
                clean_pieces=_read_pieces(gt_field.get("clean_pieces")),
                boundary_edges=frozenset(
                    _edge_ref(e) for e in gt_field.get("boundary_edges").items()
                ),
                cuts=tuple(
                    Line2.exact(*[c.number() for c in line.items()])
                    for line in gt_field.get("cuts").items()
                ),
                n_intersections=gt_field.get("n_intersections").integer(optional=True),
                n_cut_edges=gt_field.get("n_cut_edges").integer(optional=True),
                cut_length=gt_field.get("cut_length").number(optional=True),
            ),
        )
        for m in gt.matings:
            for e in m.edges:
                if e.piece_id not in pieces or e.edge_index >= len(pieces[e.piece_id]):
                    raise gt_field.get("matings").fail(f"mating {m} references a missing edge")
    seed_field = doc.get("seed", required=False)
    return _guarded(
        doc,
        lambda: PuzzleBundle(
            pieces=pieces,
            noise=ns,
            shape=_vertices(shape.get("vertices")),
            shape_kind=shape.get("kind").string(),
            seed=seed_field.integer(optional=True),
            ground_truth=gt,
            format_version=version,
        ),
    )


def eval_from_dict(field: _Field) -> EvalReport:
    return EvalReport(
        q_positions=field.get("q_positions").number(),
        precision=field.get("precision").number(),
        recall=field.get("recall").number(optional=True),
        global_alignment=_read_pose(field.get("global_alignment")),
        overlap_ratios={
            int(k): v.number() for k, v in field.get("overlap_ratios").mapping().items()
        },
    )


def solution_from_dict(doc: _Field) -> SolutionBundle:
    version = _check_version(doc)
    report_field = doc.get("report")
    if not isinstance(report_field.value, dict):
        raise report_field.fail("expected an object")
    try:
        report = SolverReport(**report_field.value)
    except TypeError as e:
        raise report_field.fail(str(e)) from e
    evaluation = doc.get("evaluation", required=False)
    return _guarded(
        doc,
        lambda: SolutionBundle(
            matings=_read_matings(doc.get("matings")),
            poses=_read_poses(doc.get("poses")),
            report=report,
            evaluation=None if evaluation.value is None else eval_from_dict(evaluation),
            format_version=version,
        ),
    )


def loads(text: str, name: str = "<bundle>") -> Bundle:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise BundleFormatError(f"{name}:{e.lineno}:{e.colno}: {e.msg}") from e
    doc = _Field(raw, name)
    kind = doc.get("kind").string()
    if kind == "puzzle":
        return puzzle_from_dict(doc)
    if kind == "solution":
        return solution_from_dict(doc)
    raise doc.get("kind").fail(f"unknown bundle kind {kind!r}")


def read_bundle(source: Source) -> Bundle:
    if hasattr(source, "read"):
        return loads(source.read(), getattr(source, "name", "<stream>"))  # type: ignore[union-attr]
    path = Path(source)  # type: ignore[arg-type]
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise BundleFormatError(f"{path}: cannot read ({e.strerror})") from e
    return loads(text, str(path))


def read_puzzle(source: Source) -> PuzzleBundle:
    bundle = read_bundle(source)
    if not isinstance(bundle, PuzzleBundle):
        raise BundleFormatError(f"{source}: expected a puzzle bundle, found a solution")
    return bundle


def read_solution(source: Source, puzzle: Optional[PuzzleBundle] = None) -> SolutionBundle:
    """Read a solution; with `puzzle`, also check that it only names the puzzle's pieces."""
    bundle = read_bundle(source)
    if not isinstance(bundle, SolutionBundle):
        raise BundleFormatError(f"{source}: expected a solution bundle, found a puzzle")
    if puzzle is not None:
        unknown = sorted(set(bundle.poses) - set(puzzle.pieces))
        if unknown:
            raise BundleFormatError(f"{source}: poses reference unknown pieces {unknown}")
    return bundle
