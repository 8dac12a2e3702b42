"""Split compound-figure captions into labeled sub-captions and pull
figure-citing sentences (citances) out of article body text.

All functions here are pure; the label-marker grammar lives in a versioned
JSON file (data/label_patterns.json) so fixtures pin its behavior.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

ROMAN = {"i": 1, "ii": 2, "iii": 3, "iv": 4, "v": 5,
         "vi": 6, "vii": 7, "viii": 8, "ix": 9, "x": 10}
ROMAN_BY_VALUE = {v: k.upper() for k, v in ROMAN.items()}

# First detected label must canonicalize to one of these, else the caption
# is treated as unlabeled (precision guard against mid-sentence parentheses).
SEQUENCE_STARTERS = {"A", "I", "1"}

SENTENCE_ABBREVIATIONS = {"Fig.", "Figs.", "al.", "e.g.", "i.e.", "vs.", "No.", "ca."}


def _load_patterns():
    raw = json.loads(
        resources.files("figurelink").joinpath("data/label_patterns.json").read_text()
    )
    return raw["version"], [(p["name"], re.compile(p["regex"])) for p in raw["patterns"]]


PATTERN_VERSION, _PATTERNS = _load_patterns()


@dataclass
class SubCaption:
    label: str | None
    text: str
    char_span: tuple[int, int]
    marker_span: tuple[int, int]


@dataclass
class Marker:
    labels: list[str]
    span: tuple[int, int]       # the label marker itself, e.g. "(A)"
    text_span: tuple[int, int]  # the sub-caption text that follows


@dataclass
class SplitResult:
    preamble: str
    subcaptions: list[SubCaption]
    markers: list[Marker] = field(default_factory=list)

    def __iter__(self):
        return iter((self.preamble, self.subcaptions))


@dataclass
class Citance:
    sentence: str
    target_fig_id: str
    label_refs: list[str]
    paragraph_index: int


def canonical_label(token: str) -> str | None:
    """Map a raw marker token to its canonical form ('a' -> 'A', 'ii' -> 'II')."""
    tok = token.strip()
    if not tok:
        return None
    low = tok.lower()
    if len(tok) > 1 and low in ROMAN:
        return tok.upper()
    if tok.isdigit():
        return str(int(tok))
    if re.fullmatch(r"[A-Za-z][0-9]?", tok):
        return tok.upper()
    return None


def _expand_range(lo: str, hi: str) -> list[str] | None:
    if lo.isalpha() and hi.isalpha():
        a, b = ord(lo.upper()), ord(hi.upper())
        if a < b <= a + 10:
            return [chr(c) for c in range(a, b + 1)]
    elif lo.isdigit() and hi.isdigit():
        a, b = int(lo), int(hi)
        if a < b <= a + 10:
            return [str(v) for v in range(a, b + 1)]
    return None


def _boundary_ok(caption: str, start: int, end: int, name: str) -> bool:
    if start > 0 and not caption[start - 1].isspace():
        return False
    if name.startswith("bare"):
        # Bare markers like "A." need following whitespace plus content.
        if end >= len(caption) or not caption[end].isspace():
            return False
    return True


def _find_markers(caption: str):
    found = []
    taken = []
    for name, pattern in _PATTERNS:
        for m in pattern.finditer(caption):
            if any(m.start() < e and s < m.end() for s, e in taken):
                continue
            if not _boundary_ok(caption, m.start(), m.end(), name):
                continue
            groups = m.groupdict()
            if "lo" in groups and groups.get("lo") is not None:
                labels = _expand_range(groups["lo"], groups["hi"])
                if labels is None:
                    continue
            else:
                lab = canonical_label(groups["tok"])
                if lab is None:
                    continue
                labels = [lab]
            found.append((m.start(), m.end(), labels))
            taken.append((m.start(), m.end()))
    found.sort()
    return found


def split_caption(caption: str) -> SplitResult:
    """Split a caption into preamble and label-keyed sub-captions.

    Captions with no recognizable labels come back whole: preamble is the
    full text and the sub-caption list is empty. Ranges like "(A-C)" expand
    to individual labels sharing one text span.
    """
    if not caption:
        raise ValueError("caption must be non-empty")
    candidates = _find_markers(caption)
    if not candidates:
        return SplitResult(caption, [])
    first_labels = candidates[0][2]
    if first_labels[0] not in SEQUENCE_STARTERS:
        return SplitResult(caption, [])

    markers: list[Marker] = []
    seen: set[str] = set()
    for start, end, labels in candidates:
        fresh = [lab for lab in labels if lab not in seen]
        if len(fresh) != len(labels):
            continue  # repeated label: not a marker, stays inside prior text
        seen.update(labels)
        markers.append(Marker(labels, (start, end), (end, end)))

    subcaptions: list[SubCaption] = []
    for i, marker in enumerate(markers):
        text_start = marker.span[1]
        text_end = markers[i + 1].span[0] if i + 1 < len(markers) else len(caption)
        segment = caption[text_start:text_end]
        lead = len(segment) - len(segment.lstrip())
        trail = len(segment) - len(segment.rstrip())
        span = (text_start + lead, text_end - trail)
        if span[0] > span[1]:
            span = (text_start, text_start)
        marker.text_span = span
        text = caption[span[0]:span[1]]
        for lab in marker.labels:
            subcaptions.append(SubCaption(lab, text, span, marker.span))

    preamble = caption[:markers[0].span[0]].strip()
    return SplitResult(preamble, subcaptions, markers)


def split_sentences(text: str) -> list[str]:
    """Sentence boundaries: '.', '!' or '?' followed by whitespace and an
    uppercase letter, unless the preceding token is a known abbreviation."""
    boundaries = [0]
    for m in re.finditer(r"[.!?](?=\s+[A-Z])", text):
        prev = re.search(r"(\S+)$", text[: m.end()])
        if prev and prev.group(1) in SENTENCE_ABBREVIATIONS:
            continue
        boundaries.append(m.end())
    boundaries.append(len(text))
    sentences = []
    for a, b in zip(boundaries, boundaries[1:]):
        s = text[a:b].strip()
        if s:
            sentences.append(s)
    return sentences


_FIG_REF = re.compile(
    r"\b[Ff]ig(?:ure|ures|s)?\.?\s*"
    r"(?P<refs>\d+[A-Za-z]?(?:\s*[–—-]\s*[A-Za-z0-9]+)?"
    r"(?:\s*(?:,|and|&)\s*\d+[A-Za-z]?(?:\s*[–—-]\s*[A-Za-z0-9]+)?)*)"
)
_REF_TOKEN = re.compile(
    r"(?P<num>\d+)(?P<letter>[A-Za-z]?)"
    r"(?:\s*[–—-]\s*(?P<num2>\d*)(?P<letter2>[A-Za-z]?))?"
)


def _figure_number(entry) -> str | None:
    for source in (entry.label_text or "", entry.fig_id):
        m = re.search(r"(\d+)\s*$", source)
        if m:
            return str(int(m.group(1)))
    return None


def _parse_ref_tokens(refs: str):
    """Yield (figure_number, panel_labels) for each token in a reference run."""
    for m in _REF_TOKEN.finditer(refs):
        num, letter = m.group("num"), m.group("letter")
        num2, letter2 = m.group("num2"), m.group("letter2")
        if letter and letter2 and not num2:
            # panel range on one figure: "2A-C"
            labels = _expand_range(letter, letter2) or [letter.upper()]
            yield str(int(num)), [lab for lab in labels]
        elif num2:
            # figure range: "2-4"
            for n in range(int(num), int(num2) + 1):
                yield str(n), []
        else:
            yield str(int(num)), [letter.upper()] if letter else []


def extract_citances(body_paragraphs: list[str], fig_entries) -> list[Citance]:
    """Find sentences citing any of the given figures.

    A sentence citing several figures yields one Citance per target; panel
    letters attached to the figure number land in label_refs.
    """
    number_to_id = {}
    for entry in fig_entries:
        num = _figure_number(entry)
        if num is not None and num not in number_to_id:
            number_to_id[num] = entry.fig_id
    citances: list[Citance] = []
    for para_idx, para in enumerate(body_paragraphs):
        for sentence in split_sentences(para):
            per_target: dict[str, list[str]] = {}
            for m in _FIG_REF.finditer(sentence):
                for num, labels in _parse_ref_tokens(m.group("refs")):
                    fig_id = number_to_id.get(num)
                    if fig_id is None:
                        continue
                    refs = per_target.setdefault(fig_id, [])
                    for lab in labels:
                        if lab not in refs:
                            refs.append(lab)
            for fig_id, labels in per_target.items():
                citances.append(Citance(sentence, fig_id, labels, para_idx))
    return citances


def split_citances(citances: list[Citance], labels: list[str]):
    """Assign citances to panel labels.

    Citances naming a panel map to it; citances with no panel letter are
    figure-level evidence and map to every label. Returns (mapping, unknown)
    where unknown holds (citance, label) pairs naming undeclared panels.
    """
    mapping: dict[str, list[Citance]] = {lab: [] for lab in labels}
    unknown: list[tuple[Citance, str]] = []
    for citance in citances:
        if not citance.label_refs:
            for lab in labels:
                mapping[lab].append(citance)
            continue
        for lab in citance.label_refs:
            if lab in mapping:
                mapping[lab].append(citance)
            else:
                unknown.append((citance, lab))
    return mapping, unknown


def fine_caption_rows(pmcid: str, fig_id: str, result: SplitResult,
                      citance_map: dict[str, list[Citance]],
                      figure_citances: list[Citance]) -> list[dict]:
    """Rows for the fine-grained pairs JSONL, one per (figure, label)."""
    rows = []
    if not result.subcaptions:
        rows.append({
            "pmcid": pmcid, "fig_id": fig_id, "label": None,
            "sub_caption": result.preamble,
            "citances": [c.sentence for c in figure_citances],
        })
        return rows
    for sub in result.subcaptions:
        assigned = citance_map.get(sub.label, [])
        rows.append({
            "pmcid": pmcid, "fig_id": fig_id, "label": sub.label,
            "sub_caption": sub.text,
            "citances": [c.sentence for c in assigned],
        })
    return rows
