"""Plain-text and JSON renderings of evaluation reports."""
import json
from pathlib import Path
from typing import List, Mapping, Sequence, Union

from pydantic import BaseModel

from app.evaluate.corpus_stats import CorpusAnalysis, CorpusStats
from app.evaluate.novelty import ORDERS, NoveltyReport
from app.evaluate.system import SystemReport


def _table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(headers, *rows)]
    lines = []
    for i, row in enumerate([headers, *rows]):
        cells = [str(c).ljust(w) if j == 0 else str(c).rjust(w) for j, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _pct(value) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_rouge_table(reports: Mapping[str, SystemReport], with_novelty: bool = True) -> str:
    """One row per system: R1/R2/RL F1 x100, optionally novel n-gram % and mean length."""
    headers = ["System", "R1", "R2", "RL"]
    if with_novelty:
        headers += [f"novel-{n}" for n in ORDERS] + ["Len"]
    rows = []
    for name, rep in reports.items():
        row = [name, _pct(100 * rep.rouge1), _pct(100 * rep.rouge2), _pct(100 * rep.rougeL)]
        if with_novelty:
            row += [_pct(rep.novelty.pct_novel.get(n)) for n in ORDERS] + [f"{rep.mean_length:.2f}"]
        rows.append(row)
    stemmed = any(rep.stemmed for rep in reports.values())
    caption = "ROUGE F1 (stemmed)" if stemmed else "ROUGE F1 (unstemmed)"
    return caption + "\n" + _table(headers, rows)


def render_novelty_table(rows: Mapping[str, NoveltyReport]) -> str:
    headers = ["Summaries"] + [f"{n}-grams" for n in ORDERS]
    body = [[name] + [_pct(rep.pct_novel.get(n)) for n in ORDERS] for name, rep in rows.items()]
    return "% novel n-grams\n" + _table(headers, body)


def render_corpus_stats(stats: CorpusStats) -> str:
    headers = ["Docs", "Doc words", "Doc sents", "Summ words", "Summ sents", "Doc vocab", "Summ vocab"]
    row = [
        str(stats.n_docs),
        f"{stats.avg_doc_words:.2f}",
        f"{stats.avg_doc_sentences:.2f}",
        f"{stats.avg_summary_words:.2f}",
        f"{stats.avg_summary_sentences:.2f}",
        str(stats.doc_vocab),
        str(stats.summary_vocab),
    ]
    return _table(headers, [row])


def render_corpus_analysis(analysis: CorpusAnalysis) -> str:
    return "\n\n".join([
        render_corpus_stats(analysis.stats),
        render_novelty_table({
            "gold": analysis.gold_novelty,
            "lead": analysis.lead.novelty,
            "ext_oracle": analysis.ext_oracle.novelty,
        }),
        render_rouge_table({"lead": analysis.lead, "ext_oracle": analysis.ext_oracle}, with_novelty=False),
    ])


def render_topics(topics: List[List[str]]) -> str:
    return "\n".join(f"T{k}: {' '.join(words)}" for k, words in enumerate(topics))


def write_json_report(path: Path, payload: Union[BaseModel, Mapping]) -> Path:
    """Write ``payload`` as indented, key-sorted JSON."""
    if isinstance(payload, BaseModel):
        data = payload.model_dump(mode="json")
    else:
        data = {k: (v.model_dump(mode="json") if isinstance(v, BaseModel) else v) for k, v in payload.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


__all__ = [
    "render_rouge_table",
    "render_novelty_table",
    "render_corpus_stats",
    "render_corpus_analysis",
    "render_topics",
    "write_json_report",
]
