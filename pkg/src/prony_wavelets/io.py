"""Readers and writers for plans, signals, banks, measurements and samples.

JSON files carry a ``format`` tag. CSV files are UTF-8 with ``#`` metadata
lines and floats written with 17 significant digits, so doubles survive a
round trip.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Optional

import numpy as np

from .banks import make_bank, with_cosets
from .errors import ValidationError
from .lattice import SupportBox, WaveletBank
from .sampling import SamplingPlan
from .signal import MeasurementSet, SparseWaveletSignal

SIGNAL_FORMAT = "prony-wavelets/signal/1"
PLAN_FORMAT = "prony-wavelets/plan/1"
BANK_FORMAT = "prony-wavelets/bank/1"

FLOAT_FMT = "{:.16e}"


def fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


# ---- scalar parsing -------------------------------------------------------

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_SQRT = re.compile(rf"^(?:(?P<sign>[+-])?(?:(?P<coef>{_NUM})\*)?sqrt(?P<rad>{_NUM}))(?:/(?P<den>{_NUM}))?$")
_FRAC = re.compile(rf"^(?P<num>{_NUM})(?:/(?P<den>{_NUM}))?$")


def parse_real(token: str) -> float:
    """A decimal, a fraction ``a/b``, or ``[c*]sqrtN[/d]`` such as ``sqrt2/64``."""
    tok = token.strip().replace(" ", "")
    m = _SQRT.match(tok)
    if m:
        val = math.sqrt(float(m["rad"])) * (float(m["coef"]) if m["coef"] else 1.0)
        if m["den"]:
            val /= float(m["den"])
        return -val if m["sign"] == "-" else val
    m = _FRAC.match(tok)
    if m:
        val = float(m["num"])
        if m["den"]:
            den = float(m["den"])
            if den == 0:
                raise ValidationError(f"division by zero in {token!r}")
            val /= den
        return val
    raise ValidationError(f"cannot parse number {token!r}")


def parse_vector(text: str) -> np.ndarray:
    """Comma-separated :func:`parse_real` tokens."""
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ValidationError("empty vector")
    return np.array([parse_real(p) for p in parts])


def parse_int_vector(text: str) -> tuple:
    try:
        vals = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ValidationError("empty integer vector")
    return vals


def parse_box(text: str, n: int) -> SupportBox:
    """``a:b`` (same range on every axis) or ``a1:b1,a2:b2,...``."""
    ranges = []
    for part in text.split(","):
        bits = part.split(":")
        if len(bits) != 2:
            raise ValidationError(f"box range must look like a:b, got {part!r}")
        try:
            ranges.append((int(bits[0]), int(bits[1])))
        except ValueError:
            raise ValidationError(f"box bounds must be integers, got {part!r}") from None
    if len(ranges) == 1:
        ranges = ranges * n
    if len(ranges) != n:
        raise ValidationError(f"box has {len(ranges)} ranges, bank dimension is {n}")
    return SupportBox([a for a, _ in ranges], [b for _, b in ranges])


def parse_grid(text: str) -> np.ndarray:
    """``a:b:N`` gives ``N`` evenly spaced points from ``a`` to ``b`` inclusive.

    Several comma-separated specs give the tensor grid, one axis each,
    returned with shape ``(N1 * N2 * ..., n)``.
    """
    axes = []
    for part in text.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise ValidationError(f"grid must look like a:b:N, got {part!r}")
        a, b = parse_real(bits[0]), parse_real(bits[1])
        try:
            count = int(bits[2])
        except ValueError:
            raise ValidationError(f"grid point count must be an integer, got {bits[2]!r}") from None
        if count < 1:
            raise ValidationError("grid needs at least one point")
        axes.append(np.linspace(a, b, count))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` inclusive of ``stop`` (when hit), or a comma list."""
    if ":" not in text:
        return parse_vector(text)
    bits = text.split(":")
    if len(bits) != 3:
        raise ValidationError(f"range must look like start:stop:step, got {text!r}")
    start, stop, step = (parse_real(b) for b in bits)
    if step <= 0 or stop < start:
        raise ValidationError(f"bad range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


# ---- JSON helpers -----------------------------------------------------------

def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _check_format(d: dict, expected: str, path="") -> None:
    if d.get("format") != expected:
        raise ValidationError(f"{path or 'input'}: expected format {expected!r}, got {d.get('format')!r}")


def bank_from_ident(ident: dict, scheme: Optional[dict] = None) -> WaveletBank:
    bank = make_bank(ident["name"], ident.get("variant"))
    if scheme is not None:
        cosets = [tuple(c) for c in scheme.get("cosets", [])]
        if cosets and cosets != [tuple(int(v) for v in c) for c in bank.scheme.cosets]:
            bank = with_cosets(bank, cosets)
    return bank


def bank_to_dict(bank: WaveletBank) -> dict:
    return {
        "format": BANK_FORMAT,
        "name": bank.name,
        "variant": bank.variant,
        "n": bank.n,
        "r": bank.r,
        "M": bank.M,
        "scheme": bank.scheme.to_dict(),
        "masks": [G.to_list() for G in bank.masks],
    }


# ---- plans ------------------------------------------------------------------

def write_plan(path, plan: SamplingPlan) -> None:
    write_json(path, plan.to_dict())


def read_plan(path) -> SamplingPlan:
    d = read_json(path)
    _check_format(d, PLAN_FORMAT, path)
    return SamplingPlan.from_dict(d, bank_from_ident(d["bank"], d.get("scheme")))


# ---- signals ----------------------------------------------------------------

def _vec_out(v) -> dict:
    v = np.asarray(v)
    if np.iscomplexobj(v) and np.any(v.imag != 0):
        return {"v": v.real.tolist(), "v_im": v.imag.tolist()}
    return {"v": np.real(v).tolist()}


def _vec_in(d: dict) -> np.ndarray:
    re_ = np.array(d["v"], dtype=float)
    return re_ + 1j * np.array(d["v_im"], dtype=float) if "v_im" in d else re_


def signal_to_dict(sig: SparseWaveletSignal, bank: Optional[WaveletBank] = None) -> dict:
    """``a0: [{k, v}]`` and ``b: [{m, j, k, v}]``; complex vectors add ``v_im``."""
    b = []
    for (m, j) in sorted(sig.b):
        c = sig.b[(m, j)]
        b.extend({"m": m, "j": j, "k": list(k), **_vec_out(c[k])} for k in sorted(c))
    return {
        "format": SIGNAL_FORMAT,
        "bank": None if bank is None else bank.ident,
        "n": sig.n,
        "r": sig.r,
        "M": sig.M,
        "J": sig.J,
        "complex": sig.is_complex,
        "a0": [{"k": list(k), **_vec_out(sig.a0[k])} for k in sorted(sig.a0)],
        "b": b,
    }


def signal_from_dict(d: dict) -> SparseWaveletSignal:
    _check_format(d, SIGNAL_FORMAT)
    try:
        a0 = {tuple(a["k"]): _vec_in(a) for a in d["a0"]}
        b: dict = {}
        for e in d["b"]:
            b.setdefault((int(e["m"]), int(e["j"])), {})[tuple(e["k"])] = _vec_in(e)
        return SparseWaveletSignal(int(d["n"]), int(d["r"]), int(d["M"]), int(d["J"]), a0, b)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed signal file ({exc})") from None


def write_signal(path, sig: SparseWaveletSignal, bank: Optional[WaveletBank] = None) -> None:
    write_json(path, signal_to_dict(sig, bank))


def read_signal(path) -> tuple:
    """``(signal, bank ident or None)``."""
    d = read_json(path)
    _check_format(d, SIGNAL_FORMAT, path)
    return signal_from_dict(d), d.get("bank")


# ---- CSV --------------------------------------------------------------------

def _read_csv(path) -> tuple:
    meta, rows, header = {}, [], None
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split():
                    if "=" in item:
                        key, val = item.split("=", 1)
                        meta[key] = val
                continue
            if header is None:
                header = next(csv.reader([line]))
                continue
            rows.append(next(csv.reader([line])))
    if header is None:
        raise ValidationError(f"{path}: missing CSV header")
    try:
        data = np.array([[float(x) for x in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    except ValueError as exc:
        raise ValidationError(f"{path}: bad CSV value ({exc})") from None
    return meta, header, data


def _write_csv(path, meta: dict, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, val in meta.items():
            if val is not None:
                fh.write(f"# {key}={val}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])


def _bank_tag(ident: Optional[dict]) -> Optional[str]:
    if not ident:
        return None
    return ident["name"] + (f":{ident['variant']}" if ident.get("variant") else "")


def _bank_untag(tag: Optional[str]) -> Optional[dict]:
    if not tag:
        return None
    name, _, variant = tag.partition(":")
    return {"name": name, "variant": variant or None}


def write_measurements(path, m: MeasurementSet) -> None:
    n = m.omega.shape[1]
    header = [f"xi_{i + 1}" for i in range(n)] + ["re", "im"]
    rows = [list(map(float, x)) + [float(v.real), float(v.imag)] for x, v in zip(m.omega, m.values)]
    _write_csv(path, {"plan": m.plan_hash, "bank": _bank_tag(m.bank)}, header, rows)


def read_measurements(path) -> MeasurementSet:
    meta, header, data = _read_csv(path)
    if header[-2:] != ["re", "im"] or not all(h.startswith("xi_") for h in header[:-2]):
        raise ValidationError(f"{path}: expected columns xi_1..xi_n,re,im")
    n = len(header) - 2
    return MeasurementSet(data[:, :n], data[:, n] + 1j * data[:, n + 1], _bank_untag(meta.get("bank")), meta.get("plan"))


def write_samples(path, samples: np.ndarray, direction=None, sparsity: Optional[int] = None) -> None:
    """Prony input: rows indexed by the half-integer ``t``, one re/im pair per component."""
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim == 1:
        samples = samples[:, None]
    s = samples.shape[0] // 2 if sparsity is None else sparsity
    t = np.arange(-s, s) + 0.5
    header = ["t"] + [f"{p}_{c + 1}" for c in range(samples.shape[1]) for p in ("re", "im")]
    rows = [[float(ti)] + [float(f(v)) for v in row for f in (np.real, np.imag)] for ti, row in zip(t, samples)]
    meta = {"sparsity": s}
    if direction is not None:
        meta["direction"] = ",".join(fmt(v) for v in np.atleast_1d(direction))
    _write_csv(path, meta, header, rows)


def read_samples(path) -> tuple:
    """``(samples (2s, r), direction or None, sparsity)``."""
    meta, header, data = _read_csv(path)
    if header[0] != "t" or (len(header) - 1) % 2:
        raise ValidationError(f"{path}: expected columns t,re_1,im_1,...")
    t = data[:, 0]
    s = len(t) // 2
    if len(t) % 2 or not np.allclose(t, np.arange(-s, s) + 0.5):
        raise ValidationError(f"{path}: sample indices must be -s+1/2, ..., s-1/2")
    vals = data[:, 1::2] + 1j * data[:, 2::2]
    direction = parse_vector(meta["direction"]) if "direction" in meta else None
    return vals, direction, s


def write_table(path, header: list, rows, meta: Optional[dict] = None) -> None:
    _write_csv(path, meta or {}, header, rows)


def read_table(path) -> tuple:
    return _read_csv(path)
