"""Bundled English stopword list.

The list targets already-tokenized text: tokens are lowercase alphabetic
runs, so contraction stems like "aren" or "ve" appear as separate entries.
Callers can extend it with a per-run extra stoplist file.
"""

from __future__ import annotations

from pathlib import Path

ENGLISH_STOPWORDS: frozenset[str] = frozenset("""
about above after again against ain all am an and any are aren as at be
because been before being below between both but by can could couldn did
didn do does doesn doing don down during each few for from further had hadn
has hasn have haven having he her here hers herself him himself his how if
in into is isn it its itself just ll ma me mightn more most mustn my myself
needn no nor not now of off on once only or other our ours ourselves out
over own re same shan she should shouldn so some such th than that the their
theirs them themselves then there these they this those through to too under
until up ve very was wasn we were weren what when where which while who whom
why will with won would wouldn you your yours yourself yourselves
""".split())


def load_stoplist(path: str | Path) -> frozenset[str]:
    """Read an extra stoplist: one word per line, blanks and # lines skipped."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)
