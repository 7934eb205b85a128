"""OOV detection and decoder markup for a downstream translation system.

Tokens of a pre-tokenized corpus are checked against the translation
system's training vocabulary; unknown ones are classified as named
entities or content words by a capitalization heuristic, given candidate
translations under a policy, and wrapped in inline elements of the form
``<oov translation="t1||t2" prob="p1||p2">token</oov>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .fileio import atomic_write
from .model import BilinearModel

POLICY_MODES = ("none", "verbatim", "bwe_all", "bwe_cw")

DEFAULT_BOUNDARY_PUNCT = frozenset({".", "!", "?", ":", ";", '"'})

_ESCAPES = (("&", "&amp;"), ("<", "&lt;"), (">", "&gt;"), ('"', "&quot;"))


class SystemVocabulary:
    """Exact-match surface vocabulary of the downstream system."""

    def __init__(self, tokens):
        self._tokens = frozenset(tokens)
        if not self._tokens:
            raise ValueError("system vocabulary is empty")

    def __contains__(self, token: str) -> bool:
        return token in self._tokens

    def __len__(self) -> int:
        return len(self._tokens)

    def __repr__(self) -> str:
        return f"SystemVocabulary({len(self._tokens)} tokens)"


def load_system_vocabulary(path) -> SystemVocabulary:
    """Read one token per line; blank lines are skipped."""
    tokens = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            token = line.strip()
            if token:
                tokens.append(token)
    if not tokens:
        raise ValueError(f"{path}: no tokens in vocabulary file")
    return SystemVocabulary(tokens)


@dataclass(frozen=True)
class TokenFlag:
    """Scan verdict for one corpus token; is_ne is meaningful for OOVs."""

    token: str
    is_oov: bool
    is_ne: bool = False


@dataclass(frozen=True)
class OovReport:
    """Corpus-level OOV counts in the shape of a coverage table row."""

    sentences: int
    tokens: int
    oov_all: int
    oov_cw: int

    @property
    def oov_all_fraction(self) -> float:
        return self.oov_all / self.tokens if self.tokens else 0.0

    @property
    def oov_cw_fraction(self) -> float:
        return self.oov_cw / self.tokens if self.tokens else 0.0


@dataclass(frozen=True)
class MarkupPolicy:
    """How OOV tokens get translation options.

    none marks nothing; verbatim marks every OOV with itself; bwe_all
    gives every OOV the model's top_n list; bwe_cw does that for content
    words only, with named entities kept verbatim.
    """

    mode: str = "none"
    top_n: int = 50
    add_verbatim_option: bool = True

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.top_n < 1:
            raise ValueError("top_n must be a positive integer")


def classify_named_entity(token: str,
                          is_sentence_initial_or_after_punct: bool) -> bool:
    """Capitalization heuristic for named entities.

    True iff the token starts with an uppercase letter in a position where
    capitalization is informative (not sentence-initial, not right after a
    punctuation mark), or the token is fully capitalized (all alphabetic
    characters uppercase, at least one of them).
    """
    if not token:
        raise ValueError("token is empty")
    if token[0].isupper() and not is_sentence_initial_or_after_punct:
        return True
    has_alpha = False
    for ch in token:
        if ch.isalpha():
            has_alpha = True
            if not ch.isupper():
                return False
    return has_alpha


def flag_sentence(tokens, vocab: SystemVocabulary,
                  boundary_punct=DEFAULT_BOUNDARY_PUNCT) -> list[TokenFlag]:
    """Flag each token of one sentence as in-vocabulary, NE OOV, or CW OOV."""
    flags = []
    for i, token in enumerate(tokens):
        if token in vocab:
            flags.append(TokenFlag(token, is_oov=False))
            continue
        positional = i == 0 or tokens[i - 1] in boundary_punct
        flags.append(
            TokenFlag(token, is_oov=True,
                      is_ne=classify_named_entity(token, positional))
        )
    return flags


def scan_oov(corpus, vocab: SystemVocabulary,
             boundary_punct=DEFAULT_BOUNDARY_PUNCT):
    """Flag every token of *corpus* against *vocab*.

    ``corpus`` is a list of sentences, each a list of tokens. Returns
    (OovReport, per-sentence flag lists). An empty corpus (no tokens at
    all) is an error.
    """
    corpus = list(corpus)
    all_flags = [flag_sentence(s, vocab, boundary_punct) for s in corpus]
    n_tokens = sum(len(f) for f in all_flags)
    if n_tokens == 0:
        raise ValueError("corpus contains no tokens")
    oov = [f for flags in all_flags for f in flags if f.is_oov]
    report = OovReport(
        sentences=len(corpus),
        tokens=n_tokens,
        oov_all=len(oov),
        oov_cw=sum(1 for f in oov if not f.is_ne),
    )
    return report, all_flags


def build_options(model: BilinearModel | None, oov: str,
                  policy: MarkupPolicy, is_ne: bool):
    """Candidate translations for one OOV under *policy*.

    Returns (options, fell_back): options is a list of (target token,
    probability) in construction order, and fell_back records a verbatim
    fallback forced by a missing source embedding. The verbatim option,
    when added to a model list, enters at the list's maximum probability
    and the whole list is renormalized to sum to 1.
    """
    if policy.mode == "none":
        raise ValueError("build_options is undefined for policy mode 'none'")
    if policy.mode == "verbatim" or (policy.mode == "bwe_cw" and is_ne):
        return [(oov, 1.0)], False
    if model is None or oov not in model.source_store:
        return [(oov, 1.0)], True

    options = list(model.top_n(oov, policy.top_n).entries)
    if policy.add_verbatim_option:
        p_max = max(p for _, p in options)
        options.append((oov, p_max))
        total = sum(p for _, p in options)
        options = [(t, p / total) for t, p in options]
    return options, False


def _escape(text: str) -> str:
    for raw, entity in _ESCAPES:
        text = text.replace(raw, entity)
    return text


def _unescape(text: str) -> str:
    for raw, entity in reversed(_ESCAPES):
        text = text.replace(entity, raw)
    return text


def format_probability(p: float) -> str:
    """Six significant digits, trailing zeros kept (0.6 -> '0.600000')."""
    return f"{p:#.6g}"


def emit_markup(tokens, options_by_position: dict, tag: str = "oov") -> str:
    """Render one sentence with inline elements at the flagged positions.

    ``options_by_position`` maps token index to a non-empty option list.
    Options are emitted in descending probability (stable, so equal
    probabilities keep construction order). Flagged tokens and their
    translations are entity-escaped; everything else passes through
    verbatim, joined by single spaces.
    """
    parts = []
    for i, token in enumerate(tokens):
        options = options_by_position.get(i)
        if options is None:
            parts.append(token)
            continue
        if not options:
            raise ValueError(f"empty option list for token {token!r}")
        ordered = sorted(options, key=lambda opt: -opt[1])
        translations = "||".join(_escape(t) for t, _ in ordered)
        probs = "||".join(format_probability(p) for _, p in ordered)
        parts.append(
            f'<{tag} translation="{translations}" prob="{probs}">'
            f"{_escape(token)}</{tag}>"
        )
    return " ".join(parts)


def parse_markup(line: str, tag: str = "oov"):
    """Inverse of :func:`emit_markup` for one line.

    Returns a list of (token, options) with options None for unmarked
    tokens. Raises ValueError when an element's translation and prob
    lists differ in length.
    """
    element = re.compile(
        rf'<{re.escape(tag)} translation="([^"]*)" prob="([^"]*)">'
        rf"([^<]*)</{re.escape(tag)}>|(\S+)"
    )
    out = []
    for match in element.finditer(line):
        if match.group(4) is not None:
            out.append((match.group(4), None))
            continue
        translations = [_unescape(t) for t in match.group(1).split("||")]
        probs = match.group(2).split("||")
        if len(translations) != len(probs):
            raise ValueError(
                f"markup element has {len(translations)} translations "
                f"but {len(probs)} probabilities"
            )
        options = [(t, float(p)) for t, p in zip(translations, probs)]
        out.append((_unescape(match.group(3)), options))
    return out


@dataclass
class MarkupSummary:
    """Aggregate outcome of annotating a corpus."""

    report: OovReport
    marked_tokens: int = 0
    verbatim_fallbacks: int = 0
    per_sentence_flags: list = field(default_factory=list, repr=False)


def annotate_corpus(corpus, vocab: SystemVocabulary, policy: MarkupPolicy,
                    model: BilinearModel | None = None, tag: str = "oov",
                    boundary_punct=DEFAULT_BOUNDARY_PUNCT):
    """Mark up a whole corpus; returns (lines, MarkupSummary).

    Output has exactly one line per input sentence, in order. Policy mode
    'none' reproduces the input (single-space joined) with no elements.
    """
    corpus = list(corpus)
    report, all_flags = scan_oov(corpus, vocab, boundary_punct)
    summary = MarkupSummary(report=report, per_sentence_flags=all_flags)
    lines = []
    for tokens, flags in zip(corpus, all_flags):
        options_by_position = {}
        if policy.mode != "none":
            for i, flag in enumerate(flags):
                if not flag.is_oov:
                    continue
                options, fell_back = build_options(
                    model, flag.token, policy, flag.is_ne
                )
                options_by_position[i] = options
                summary.marked_tokens += 1
                summary.verbatim_fallbacks += int(fell_back)
        lines.append(emit_markup(tokens, options_by_position, tag=tag))
    return lines, summary


def read_corpus(path) -> list[list[str]]:
    """One whitespace-tokenized sentence per line; blank lines stay empty."""
    sentences = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            sentences.append(line.split())
    return sentences


def write_corpus(lines, path) -> None:
    with atomic_write(path) as handle:
        for line in lines:
            handle.write(line + "\n")


def write_oov_report(report: OovReport, path) -> None:
    """Tab-delimited coverage summary: counts plus token fractions."""
    with atomic_write(path) as handle:
        handle.write(f"sentences\t{report.sentences}\n")
        handle.write(f"tokens\t{report.tokens}\n")
        handle.write(
            f"oov_all\t{report.oov_all}\t{report.oov_all_fraction:.6f}\n"
        )
        handle.write(
            f"oov_cw\t{report.oov_cw}\t{report.oov_cw_fraction:.6f}\n"
        )
