"""JSON reports with decimal-string numbers.

Floats are written as {"re": ..., "im": ..., "prec": bits} (complex) or
{"dec": ..., "prec": bits} (real); rationals as "p/q" strings under {"q": ...}.
Decimal strings carry enough digits to round-trip at the tagged precision.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import mpmath
from mpmath.libmp import repr_dps, to_str

from .series import EpsSeries


def _raw(x):
    # no re-rounding through the ambient context
    return x._mpf_ if hasattr(x, "_mpf_") else mpmath.mpf(x)._mpf_


def _tag(prec: int, *xs) -> int:
    """Precision tag: the working precision, raised to cover every mantissa."""
    return max([prec] + [_raw(x)[3] for x in xs])


def _dec(x, prec: int) -> str:
    return to_str(_raw(x), repr_dps(prec))


def encode(obj, prec: int | None = None):
    """Plain JSON-compatible structure; mpmath numbers keep their precision tag."""
    prec = prec or mpmath.mp.prec
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return {"q": f"{obj.numerator}/{obj.denominator}"}
    if isinstance(obj, float):
        # exact binary value; tagged like any other real so decode/encode is stable
        obj = mpmath.mpf(obj)
    if isinstance(obj, mpmath.mpf) or hasattr(obj, "_mpf_"):
        # mpf or a lazy constant such as mpmath.pi
        p = _tag(prec, obj)
        return {"dec": _dec(obj, p), "prec": p}
    if isinstance(obj, (mpmath.mpc, complex)):
        c = obj if isinstance(obj, mpmath.mpc) else mpmath.mpc(obj)
        p = _tag(prec, c.real, c.imag)
        return {"re": _dec(c.real, p), "im": _dec(c.imag, p), "prec": p}
    if isinstance(obj, EpsSeries):
        records = []
        for j in sorted(obj.coeffs):
            c = mpmath.mpc(obj.coeffs[j])
            p = _tag(prec, c.real, c.imag)
            records.append([f"{j}/2", _dec(c.real, p), _dec(c.imag, p), p])
        return {"eps_series": records, "order": f"{obj.top}/2"}
    if isinstance(obj, dict):
        return {str(k): encode(v, prec) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v, prec) for v in obj]
    if hasattr(obj, "to_dict"):
        return encode(obj.to_dict(), prec)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def decode(obj):
    """Inverse of encode (EpsSeries records come back as EpsSeries)."""
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    if not isinstance(obj, dict):
        return obj
    keys = set(obj)
    if keys == {"q"}:
        return Fraction(obj["q"])
    if keys == {"dec", "prec"}:
        with mpmath.workprec(obj["prec"]):
            return mpmath.mpf(obj["dec"])
    if keys == {"re", "im", "prec"}:
        with mpmath.workprec(obj["prec"]):
            return mpmath.mpc(mpmath.mpf(obj["re"]), mpmath.mpf(obj["im"]))
    if keys == {"eps_series", "order"}:
        top = int(Fraction(obj["order"]) * 2)
        coeffs = {}
        for exp, re, im, prec in obj["eps_series"]:
            with mpmath.workprec(prec):
                coeffs[int(Fraction(exp) * 2)] = mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im))
        return EpsSeries(coeffs, top)
    return {k: decode(v) for k, v in obj.items()}


def dumps(report: dict, prec: int | None = None) -> str:
    with mpmath.workprec(prec or mpmath.mp.prec):
        body = encode(report, prec)
    return json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def loads(text: str):
    return decode(json.loads(text))


RADIAL_HEADER = ["epsilon", "direct_re", "direct_im", "predicted_re", "predicted_im", "rel_err"]
COEFF_HEADER = ["n", "c_exact", "c_predicted", "rel_err"]
KMS_HEADER = ["m", "index", "X_re", "X_im", "Y_re", "Y_im", "residual"]


def _s(x, digits=30) -> str:
    return mpmath.nstr(x, digits, min_fixed=-mpmath.inf, max_fixed=mpmath.inf) if not isinstance(x, (int, str)) else str(x)


def plot_rows(report: dict) -> tuple[list[str], list[list[str]]]:
    """CSV header and rows for verify-radial, coeff-asym and kms-check reports."""
    cmd = report.get("command")
    if cmd == "verify-radial":
        rows = [
            [
                _s(r["epsilon"]),
                _s(mpmath.re(r["direct"])),
                _s(mpmath.im(r["direct"])),
                _s(mpmath.re(r["predicted"])),
                _s(mpmath.im(r["predicted"])),
                _s(r["rel_err"]) if r["rel_err"] is not None else "",
            ]
            for r in report["table"]
        ]
        return RADIAL_HEADER, rows
    if cmd == "coeff-asym":
        rows = [[str(r["n"]), str(r["c_exact"]), _s(r["c_predicted"]), _s(r["rel_err"])] for r in report["table"]]
        return COEFF_HEADER, rows
    if cmd == "kms-check":
        rows = [
            [str(r["m"]), str(r["index"]), _s(mpmath.re(r["X"])), _s(mpmath.im(r["X"])), _s(mpmath.re(r["Y"])), _s(mpmath.im(r["Y"])), _s(r["residual"], 8)]
            for r in report["table"]
        ]
        return KMS_HEADER, rows
    raise ValueError(f"no plot data for command {cmd!r}")


def emit_plot_data(report: dict) -> str:
    header, rows = plot_rows(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
