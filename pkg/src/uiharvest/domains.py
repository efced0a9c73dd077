"""Registrable-domain (eTLD+1) extraction.

Uses the public-suffix list when a PSL package is installed; otherwise
falls back to the last two host labels, which is what the split logic
needs for grouping pages of one site together.
"""

from __future__ import annotations

_psl = None
_psl_checked = False


def _public_suffix_list():
    global _psl, _psl_checked
    if not _psl_checked:
        _psl_checked = True
        try:
            from publicsuffix2 import PublicSuffixList  # type: ignore

            _psl = PublicSuffixList()
        except ImportError:
            _psl = None
    return _psl


def registrable_domain(host: str) -> str:
    """Return the eTLD+1 for a hostname, e.g. shop.example.com -> example.com.

    IP addresses and single-label hosts (localhost) are returned unchanged.
    """
    host = host.strip(".").lower()
    if not host:
        return host
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if all(label.isdigit() for label in labels):  # IPv4 literal
        return host
    psl = _public_suffix_list()
    if psl is not None:
        sld = psl.get_sld(host)
        if sld:
            return sld
    return ".".join(labels[-2:])
