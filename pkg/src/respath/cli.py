"""Command-line interface.

Protocol files are line oriented.  A ``key = value`` header is followed by
one ``segment <gap> <duration> [<coupling>]`` line per segment::

    # sudden crossing, overlapping resonances
    beta = 1.0
    lambda = 0.1
    regime = overlapping
    form_factor = default
    observable = projector_minus
    rho0 = 0 0 0 1
    segment  0.05  1.0
    segment -0.07  4.0

Header keys: ``beta``, ``lambda``, ``regime``, ``form_factor``
(``default``, ``flat-cutoff`` or ``file:<path>``), ``observable`` (a
name or four matrix entries, row-major), ``rho0`` (``ground``, ``excited``,
``mixed`` or four entries), ``gap_floor``, ``max_jumps`` and, for the
``continuum`` command, ``schedule`` (two-column ``t Delta`` file),
``horizon`` and ``discretizations`` (comma-separated segment counts).
Relative paths are resolved against the protocol file.  ``#`` starts a
comment.  Duplicate keys: the last one wins, with a warning.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .continuum import GapSchedule, continuum_evaluate, discretize
from .errors import BudgetError, NumericError, ParseError, ResonanceError, ValidationError
from .model import (
    BASIS,
    NAMED_OBSERVABLES,
    Observable,
    Protocol,
    Regime,
    Segment,
    SystemState,
    excited_projector,
    ground_state,
)
from .pathsum import FULL_BUDGET, REMAINDER_CLASS, expectation_full, expectation_truncated, resonance_data
from .scenarios import CrossingSpec, crossing_jump, crossing_limits, crossing_probability
from .spectral import SpectralDensity

log = logging.getLogger("respath")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4

COMMANDS = ("resonances", "evolve", "crossing", "continuum")
HEADER_KEYS = (
    "beta",
    "lambda",
    "regime",
    "form_factor",
    "observable",
    "rho0",
    "gap_floor",
    "max_jumps",
    "schedule",
    "horizon",
    "discretizations",
)
DEFAULT_DISCRETIZATIONS = (25, 50, 100, 200)
DEFAULT_TRUNCATION = 4


def fmt(x):
    """Shortest round-trip-safe text for a float, fixed at 17 significant digits."""
    return format(float(x), ".17g")


# -- protocol files --------------------------------------------------------


@dataclass
class ProtocolFile:
    """Parsed header plus the validated :class:`Protocol` (when segments are present)."""

    header: dict
    segments: list
    protocol: Protocol | None
    observable: Observable
    rho0: SystemState
    spectral: SpectralDensity
    beta: float = 1.0
    base_dir: str = "."
    lines: dict = field(default_factory=dict)


def _parse_number(token, line, what):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what}: expected a number, got {token!r}", line) from None
    return value


def _parse_matrix(text, line, what):
    tokens = text.replace(",", " ").split()
    if len(tokens) != 4:
        raise ParseError(f"{what}: expected a name or 4 matrix entries, got {text!r}", line)
    try:
        entries = [complex(t.replace("i", "j")) for t in tokens]
    except ValueError:
        raise ParseError(f"{what}: non-numeric matrix entry in {text!r}", line) from None
    return np.array(entries, dtype=complex).reshape(2, 2)


def _tokenize(text):
    """Split into ``(line_number, key, value)`` header items and segment rows."""
    header, lines, segments = {}, {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            if key not in HEADER_KEYS:
                raise ParseError(f"unknown key {key!r}; known keys: {', '.join(HEADER_KEYS)}", lineno)
            if not value:
                raise ParseError(f"key {key!r} has an empty value", lineno)
            if key in header:
                log.warning("line %d: duplicate key %r, using the later value", lineno, key)
            header[key] = value
            lines[key] = lineno
            continue
        parts = line.split()
        if parts[0].lower() != "segment":
            raise ParseError(f"expected 'key = value' or 'segment <gap> <duration> [<coupling>]', got {line!r}", lineno)
        if len(parts) not in (3, 4):
            raise ParseError("segment lines take a gap, a duration and an optional coupling", lineno)
        values = [_parse_number(p, lineno, "segment") for p in parts[1:]]
        segments.append((lineno, values))
    return header, lines, segments


def _resolve(base_dir, path):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def parse_protocol(text, base_dir=".", regime=None, require_segments=True):
    """Parse protocol-file text.

    Parameters
    ----------
    text : str
    base_dir : str
        Directory against which relative file references are resolved.
    regime : str, optional
        Overrides the ``regime`` key.
    require_segments : bool
        When False a file without segment lines is accepted (``continuum``).

    Returns
    -------
    ProtocolFile

    Raises
    ------
    ParseError
        Malformed lines, with the line number.
    ValidationError
        Well-formed input violating an invariant (``N >= 1``, ``tau**2 != 1``, ...).
    """
    header, lines, rows = _tokenize(text)

    def number(key, default=None):
        if key not in header:
            return default
        return _parse_number(header[key], lines[key], key)

    beta = number("beta", 1.0)
    coupling = number("lambda")
    ff = header.get("form_factor", "default")
    if ff.startswith("file:"):
        ff = "file:" + _resolve(base_dir, ff[5:].strip())
    try:
        spectral = SpectralDensity.named(ff)
    except (OSError, ValueError) as exc:
        if isinstance(exc, ResonanceError):
            raise
        raise ParseError(f"form_factor: {exc}", lines.get("form_factor")) from None

    segments = []
    for lineno, values in rows:
        lam = values[2] if len(values) == 3 else coupling
        if lam is None:
            raise ParseError("segment has no coupling and no 'lambda' key is set", lineno)
        try:
            segments.append(Segment(values[0], lam, values[1]))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None

    obs_text = header.get("observable", "identity")
    if obs_text in NAMED_OBSERVABLES:
        observable = Observable.named(obs_text)
    else:
        observable = Observable(_parse_matrix(obs_text, lines.get("observable"), "observable"))

    rho_text = header.get("rho0", "mixed")
    if rho_text == "mixed":
        rho0 = SystemState(np.eye(2) / 2)
    elif rho_text in ("ground", "excited"):
        if not segments:
            raise ValidationError("rho0 = ground/excited needs at least one segment to fix the gap")
        g = segments[0].gap
        rho0 = ground_state(g) if rho_text == "ground" else SystemState(excited_projector(g).a)
    else:
        rho0 = SystemState(_parse_matrix(rho_text, lines.get("rho0"), "rho0"))

    protocol = None
    if require_segments or segments:
        if not segments:
            raise ValidationError("protocol needs N >= 1 segments; add 'segment <gap> <duration>' lines")
        protocol = Protocol(
            segments,
            beta,
            spectral,
            regime or header.get("regime", "overlapping"),
            gap_floor=number("gap_floor"),
        )
    return ProtocolFile(header, segments, protocol, observable, rho0, spectral, beta, base_dir, lines)


def read_protocol(path, regime=None, require_segments=True):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not UTF-8 text") from None
    return parse_protocol(text, os.path.dirname(os.path.abspath(path)), regime, require_segments)


# -- run configuration -----------------------------------------------------


@dataclass(frozen=True)
class Grid:
    start: float
    end: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("grid needs n >= 2 points")
        if not (0 <= self.start < self.end and math.isfinite(self.end)):
            raise ValidationError("grid needs 0 <= t0 < t1")

    @classmethod
    def parse(cls, text):
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"--grid expects t0:t1:n, got {text!r}")
        try:
            start, end, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError(f"--grid expects t0:t1:n, got {text!r}") from None
        return cls(start, end, n)

    def times(self):
        return np.linspace(self.start, self.end, self.n)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    output_path: str | None = None
    grid: Grid | None = None
    max_jumps: int | None = None
    regime: str | None = None
    oracle: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.max_jumps is not None and self.max_jumps < 0:
            raise ValidationError("--max-jumps must be >= 0")


# -- commands --------------------------------------------------------------


def _writer(buf, columns):
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    return w


def _cmd_resonances(cfg, pf):
    data = resonance_data(pf.protocol)
    buf = io.StringIO()
    w = _writer(buf, ["kind", "segment", "r", "r_prime", "component", "re", "im", "remainder_class"])
    for j, rs in enumerate(data.sets):
        for k in range(4):
            e = rs.energies[k]
            w.writerow(["energy", j, k + 1, "", "", fmt(e.real), fmt(e.imag), REMAINDER_CLASS])
        for kind, vecs in (("eta", rs.right), ("eta_tilde", rs.left)):
            for k in range(4):
                for c, label in enumerate(BASIS):
                    v = vecs[k, c]
                    w.writerow([kind, j, k + 1, "", label, fmt(v.real), fmt(v.imag), REMAINDER_CLASS])
    for j, tm in enumerate(data.transitions):
        for k in range(4):
            for m in range(4):
                v = tm.t[k, m]
                w.writerow(["transition", j, k + 1, m + 1, "", fmt(v.real), fmt(v.imag), REMAINDER_CLASS])
    return buf.getvalue()


def _evolve_value(protocol, rho0, a, max_jumps):
    n = protocol.n_segments
    if max_jumps is None:
        if n <= FULL_BUDGET:
            return expectation_full(protocol, rho0, a), "full"
        max_jumps = DEFAULT_TRUNCATION
        log.warning("N = %d exceeds the full-enumeration budget; truncating at K = %d", n, max_jumps)
    return expectation_truncated(protocol, rho0, a, max_jumps), str(max_jumps)


def _cmd_evolve(cfg, pf):
    grid = cfg.grid or Grid(0.0, pf.protocol.total_time, 101)
    max_jumps = cfg.max_jumps
    if max_jumps is None and "max_jumps" in pf.header:
        max_jumps = int(_parse_number(pf.header["max_jumps"], pf.lines["max_jumps"], "max_jumps"))
    columns = ["t", "re", "im", "truncation_K", "remainder_class"]
    if cfg.oracle:
        columns += ["oracle_re", "oracle_im", "oracle_abs_diff"]
    buf = io.StringIO()
    w = _writer(buf, columns)
    for t in grid.times():
        proto = pf.protocol.truncated(float(t))
        value, k = _evolve_value(proto, pf.rho0, pf.observable, max_jumps)
        row = [fmt(t), fmt(value.real), fmt(value.imag), k, REMAINDER_CLASS]
        if cfg.oracle:
            if proto.n_segments > FULL_BUDGET:
                raise BudgetError(f"--oracle needs N <= {FULL_BUDGET} segments at every grid time")
            ref = expectation_full(proto, pf.rho0, pf.observable)
            diff = abs(ref - value)
            if (k == "full" or int(k) >= proto.n_segments - 1) and diff > 1e-9:
                raise NumericError(f"t = {t}: full enumeration disagrees with the evaluated sum", residual=diff)
            row += [fmt(ref.real), fmt(ref.imag), fmt(diff)]
        w.writerow(row)
    return buf.getvalue()


def crossing_spec_from(pf):
    """Two-segment protocol ``(+Delta1, t_c), (-Delta2, *)`` -> :class:`CrossingSpec`."""
    segs = pf.segments
    if len(segs) != 2 or not (segs[0].gap > 0 > segs[1].gap):
        raise ValidationError(
            "crossing needs exactly two segments with a positive then a negative gap "
            "('segment Delta1 t_c' and 'segment -Delta2 <any duration>')"
        )
    if segs[0].coupling != segs[1].coupling:
        raise ValidationError("crossing needs the same coupling on both segments")
    p = pf.protocol
    return CrossingSpec(
        segs[0].gap,
        -segs[1].gap,
        segs[0].duration,
        segs[0].coupling,
        p.beta,
        p.regime,
        p.spectral,
        gap_floor=p.gap_floor,
    )


def _cmd_crossing(cfg, pf):
    spec = crossing_spec_from(pf)
    grid = cfg.grid or Grid(0.0, pf.protocol.total_time, 101)
    before, after = crossing_limits(spec)
    jump = crossing_jump(spec)
    rows = [(float(t), crossing_probability(spec, float(t)), "") for t in grid.times()]
    if grid.start <= spec.t_c <= grid.end:
        rows += [(spec.t_c, before, "t_c-"), (spec.t_c, after, "t_c+")]
        rows.sort(key=lambda r: (r[0], {"": 1, "t_c-": 0, "t_c+": 2}[r[2]]))
    buf = io.StringIO()
    w = _writer(buf, ["t", "p_excited", "marker", "jump", "remainder_class"])
    for t, p, marker in rows:
        w.writerow([fmt(t), fmt(p), marker, fmt(jump) if marker == "t_c+" else "", spec.remainder])
    return buf.getvalue()


def _cmd_continuum(cfg, pf):
    if "schedule" not in pf.header:
        raise ValidationError("continuum needs a 'schedule = <file>' key")
    coupling = pf.header.get("lambda")
    if coupling is None:
        raise ValidationError("continuum needs a 'lambda' key")
    coupling = _parse_number(coupling, pf.lines["lambda"], "lambda")
    sched = GapSchedule.from_file(_resolve(pf.base_dir, pf.header["schedule"]), coupling, pf.spectral)
    if "horizon" in pf.header:
        horizon = _parse_number(pf.header["horizon"], pf.lines["horizon"], "horizon")
    elif cfg.grid is not None:
        horizon = cfg.grid.end
    else:
        horizon = sched.t_range[1]
    if "discretizations" in pf.header:
        try:
            ns = tuple(int(x) for x in pf.header["discretizations"].replace(",", " ").split())
        except ValueError:
            raise ParseError("discretizations: expected integers", pf.lines["discretizations"]) from None
    else:
        ns = DEFAULT_DISCRETIZATIONS
    max_jumps = 1 if cfg.max_jumps is None else cfg.max_jumps
    res = continuum_evaluate(sched, horizon, pf.rho0, pf.observable)
    buf = io.StringIO()
    w = _writer(buf, ["method", "n", "truncation_K", "re", "im", "abs_diff", "tau_prime_max_t", "remainder_class"])
    w.writerow(["continuum", "", 1, fmt(res.value.real), fmt(res.value.imag), fmt(0.0), fmt(res.tau_prime_max), res.remainder])
    for n in ns:
        proto = discretize(sched, horizon, n, beta=pf.beta)
        v = expectation_truncated(proto, pf.rho0, pf.observable, max_jumps)
        w.writerow(
            ["discrete", n, max_jumps, fmt(v.real), fmt(v.imag), fmt(abs(v - res.value)), fmt(res.tau_prime_max), REMAINDER_CLASS]
        )
    return buf.getvalue()


_COMMANDS = {
    "resonances": _cmd_resonances,
    "evolve": _cmd_evolve,
    "crossing": _cmd_crossing,
    "continuum": _cmd_continuum,
}


def execute(cfg):
    """Run a command and return the CSV text (exceptions propagate)."""
    pf = read_protocol(cfg.input_path, cfg.regime, require_segments=cfg.command != "continuum")
    return _COMMANDS[cfg.command](cfg, pf)


def run(cfg, stdout=None, stderr=None):
    """Run a command, write its CSV, and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text = execute(cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=stderr)
        return EXIT_PARSE
    except (ValidationError, BudgetError) as exc:
        print(f"validation error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="respath",
        description="Dominant-order resonance path sums for a driven spin coupled to a fermionic reservoir.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "resonances": "per-segment resonance energies, vectors and transition matrices",
        "evolve": "expectation of the configured observable on a time grid",
        "crossing": "excited-state population through a sudden level crossing",
        "continuum": "continuous-time limit versus discretized path sums",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--input", "-i", required=True, help="protocol file")
        p.add_argument("--output", "-o", help="CSV output path (default: stdout)")
        p.add_argument("--grid", help="time grid t0:t1:n")
        p.add_argument("--max-jumps", type=int, help="truncate the path sum at K jumps")
        p.add_argument("--regime", choices=[r.value for r in Regime], help="override the file's regime")
        p.add_argument("--oracle", action="store_true", help="cross-check against full enumeration (N <= 13)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        grid = Grid.parse(args.grid) if args.grid else None
        cfg = RunConfig(args.command, args.input, args.output, grid, args.max_jumps, args.regime, args.oracle)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
