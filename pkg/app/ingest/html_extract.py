from typing import Tuple

from bs4 import BeautifulSoup

from app.errors import MissingSummaryClass

SUMMARY_CLASS = "story-body__introduction"
BODY_CLASS = "story-body__inner"


def extract_summary(html: str) -> Tuple[str, str]:
    """
    Split a BBC article page into (summary_text, body_text).
    The summary is every element bearing the introduction class, joined by a space;
    the body is the remaining paragraph text, one paragraph per line.
    """
    soup = BeautifulSoup(html, "html.parser")
    intros = soup.find_all(class_=SUMMARY_CLASS)
    if not intros:
        raise MissingSummaryClass(f"no element with class '{SUMMARY_CLASS}'")

    summary = " ".join(el.get_text(" ", strip=True) for el in intros)
    for el in intros:
        el.decompose()

    root = soup.find(class_=BODY_CLASS) or soup.body or soup
    for junk in root.find_all(["script", "style", "noscript"]):
        junk.decompose()

    paragraphs = root.find_all("p")
    if paragraphs:
        body = "\n".join(p.get_text(" ", strip=True) for p in paragraphs)
    else:
        body = root.get_text("\n", strip=True)
    return summary, body.strip()
