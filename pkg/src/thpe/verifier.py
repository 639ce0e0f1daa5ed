"""Certificates tying computed profiles back to the eps-perfect definition.

All checks run in exact rational arithmetic.  Profiles produced by the
solver are dyadic, so converting them to Fractions loses nothing.
"""
from __future__ import annotations

from fractions import Fraction

from thpe.game import (CertificateEntry, EpsPECertificate, Game, MixedProfile, ShapeError,
                       build_certificate, format_rational, parse_rational)

__all__ = ["CertificateEntry", "EpsPECertificate", "check_certificate", "check_delta_nearness",
           "format_certificate", "parse_certificate"]


def check_certificate(g: Game, x: MixedProfile, eps, slack=Fraction(0)) -> tuple[EpsPECertificate, bool]:
    cert = build_certificate(g, x, eps, slack)
    return cert, cert.valid


def check_delta_nearness(x: MixedProfile, y: MixedProfile, delta) -> bool:
    if x.strategy_counts != y.strategy_counts:
        raise ShapeError("profiles have different shapes")
    return x.distance(y) <= Fraction(delta)


def format_certificate(cert: EpsPECertificate) -> str:
    lines = [f"eps {format_rational(cert.eps)} slack {format_rational(cert.slack)}",
             "player strategy probability gap exceeds_eps"]
    for e in cert.entries:
        lines.append(f"{e.player + 1} {e.strategy + 1} {format_rational(e.probability)} "
                     f"{format_rational(e.gap)} {'yes' if e.exceeds_eps else 'no'}")
    lines.append(f"fully_mixed {'yes' if cert.fully_mixed else 'no'}")
    lines.append(f"verdict {'valid' if cert.valid else 'invalid'}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> EpsPECertificate:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        head = lines[0]
        eps, slack = parse_rational(head[1]), parse_rational(head[3])
        entries = []
        for toks in lines[2:-2]:
            entries.append(CertificateEntry(int(toks[0]) - 1, int(toks[1]) - 1,
                                            parse_rational(toks[2]), parse_rational(toks[3]),
                                            toks[4] == "yes"))
        fully_mixed = lines[-2][1] == "yes"
        verdict = lines[-1][1]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed certificate table: {exc}") from None
    cert = EpsPECertificate(eps, slack, tuple(entries), fully_mixed)
    if cert.valid != (verdict == "valid"):
        raise ValueError("certificate verdict line disagrees with its entries")
    return cert
