"""Walk article package directories, parse them in parallel, and emit one
JSON object per article to a JSONL corpus file.

Per-article failures are caught and become skip-log entries, never run
aborts. Results are canonically ordered by pmcid before writing, so output
bytes are identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import jats

log = logging.getLogger(__name__)

SKIP_MALFORMED_XML = "malformed_xml"
SKIP_NO_FIGURES = "no_figures"
SKIP_MISSING_MEDIA = "missing_media"

MEDIA_EXTENSIONS = {".ppm", ".pgm", ".png", ".jpg", ".jpeg", ".gif", ".tif", ".tiff"}


class RootNotFound(FileNotFoundError):
    pass


class OutputUnwritable(OSError):
    pass


@dataclass
class ArticlePackage:
    package_path: Path
    pmcid: str
    has_xml: bool
    media_files: list[str]

    def xml_path(self) -> Path | None:
        if not self.has_xml:
            return None
        candidates = sorted(self.package_path.glob("*.xml"))
        return candidates[0] if candidates else None

    def media_index(self) -> dict[str, str]:
        index: dict[str, str] = {}
        for rel in self.media_files:
            stem = Path(rel).stem
            index.setdefault(stem, str(self.package_path / rel))
        return index


@dataclass
class IngestReport:
    articles_seen: int = 0
    articles_emitted: int = 0
    skipped_no_figures: int = 0
    skipped_malformed: int = 0
    pairs_emitted: int = 0
    wall_time: float = 0.0

    def counters(self) -> dict:
        return {
            "articles_seen": self.articles_seen,
            "articles_emitted": self.articles_emitted,
            "skipped_no_figures": self.skipped_no_figures,
            "skipped_malformed": self.skipped_malformed,
            "pairs_emitted": self.pairs_emitted,
        }


def enumerate_packages(root):
    """Yield every package directory under root, ordered by pmcid.

    A package is a direct subdirectory of root; its name is the pmcid.
    Packages without an XML file are yielded with has_xml=False.
    """
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(str(root))
    try:
        entries = sorted(p for p in root.iterdir() if p.is_dir())
    except PermissionError as exc:
        raise PermissionError(f"cannot list {root}") from exc
    for pkg_dir in entries:
        media = sorted(
            p.name for p in pkg_dir.iterdir()
            if p.is_file() and p.suffix.lower() in MEDIA_EXTENSIONS
        )
        has_xml = any(p.suffix == ".xml" for p in pkg_dir.iterdir())
        yield ArticlePackage(pkg_dir, pkg_dir.name, has_xml, media)


def _process_package(package: ArticlePackage):
    """Returns ("ok", pmcid, json_obj, n_pairs, fig_skips) or
    ("skip", pmcid, reason)."""
    if not package.has_xml:
        return ("skip", package.pmcid, SKIP_MALFORMED_XML)
    try:
        record = jats.parse_article(package.xml_path().read_bytes())
    except jats.MalformedXml:
        return ("skip", package.pmcid, SKIP_MALFORMED_XML)
    except jats.MissingPmcid:
        return ("skip", package.pmcid, SKIP_MALFORMED_XML)
    except jats.NoFigures:
        return ("skip", package.pmcid, SKIP_NO_FIGURES)
    except Exception:  # per-article isolation: any fault becomes a skip
        log.exception("unexpected failure parsing %s", package.pmcid)
        return ("skip", package.pmcid, SKIP_MALFORMED_XML)

    pairs, unresolved = jats.extract_pairs(record, package.media_index())
    fig_skips = [(fig.fig_id, SKIP_MISSING_MEDIA) for fig in unresolved]
    fig_skips += [
        (fig_id, SKIP_NO_FIGURES if reason == jats.DROP_EMPTY_CAPTION else SKIP_MISSING_MEDIA)
        for fig_id, reason in record.dropped_figures
    ]
    if not pairs:
        return ("skip", package.pmcid, SKIP_MISSING_MEDIA)

    resolved_ids = {p.fig_id for p in pairs}
    obj = {
        "pmid": record.pmid,
        "pmcid": record.pmcid,
        "figures": [
            {"fig_id": f.fig_id, "graphic_ref": f.graphic_ref, "caption": f.caption}
            for f in record.figures if f.fig_id in resolved_ids
        ],
        "body_paragraphs": record.body_paragraphs,
    }
    return ("ok", package.pmcid, obj, len(pairs), fig_skips)


def _atomic_write_lines(path, lines):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputUnwritable(str(exc)) from exc


def run_pipeline(root, out_path, skip_log_path=None, workers: int = 1) -> IngestReport:
    """Parse every package under root and write the corpus JSONL.

    Output order is ascending pmcid regardless of completion order; skip
    reasons go to the sidecar skip log. Per-article exceptions never abort
    the run.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    start = time.monotonic()
    packages = list(enumerate_packages(root))
    report = IngestReport(articles_seen=len(packages))

    if workers == 1:
        outcomes = [_process_package(p) for p in packages]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_process_package, packages))

    emitted: list[tuple[str, dict]] = []
    skips: list[dict] = []
    for outcome in outcomes:
        if outcome[0] == "ok":
            _, pmcid, obj, n_pairs, fig_skips = outcome
            emitted.append((pmcid, obj))
            report.articles_emitted += 1
            report.pairs_emitted += n_pairs
            for fig_id, reason in fig_skips:
                skips.append({"pmcid": pmcid, "reason": reason, "fig_id": fig_id})
        else:
            _, pmcid, reason = outcome
            # missing_media articles count as no-figure skips: they carry
            # no emittable pair even though the XML parsed.
            if reason in (SKIP_NO_FIGURES, SKIP_MISSING_MEDIA):
                report.skipped_no_figures += 1
            else:
                report.skipped_malformed += 1
            skips.append({"pmcid": pmcid, "reason": reason})

    emitted.sort(key=lambda kv: kv[0])
    skips.sort(key=lambda s: (s["pmcid"], s.get("fig_id", "")))
    _atomic_write_lines(
        out_path,
        (json.dumps(obj, ensure_ascii=False, sort_keys=False) for _, obj in emitted),
    )
    if skip_log_path is not None:
        _atomic_write_lines(
            skip_log_path, (json.dumps(s, ensure_ascii=False) for s in skips))

    report.wall_time = time.monotonic() - start
    return report
