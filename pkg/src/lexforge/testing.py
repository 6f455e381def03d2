"""Synthetic corpus generation for hermetic runs and tests."""

from __future__ import annotations

import random
from typing import Optional

from .corpus import Document, SOURCES

_ZH_CHARS = "法律条文判决事实证据权利义务责任程序机关当事人合同侵权赔偿刑罚诉讼审理裁定"
_EN_WORDS = ("court", "statute", "judgment", "liability", "contract", "evidence",
             "appeal", "provision", "damages", "procedure", "counsel", "verdict")


def make_mini_corpus(n: int, seed: int = 0,
                     sources: Optional[list[str]] = None) -> list[Document]:
    """Deterministic synthetic documents spanning both languages and all sources."""
    rng = random.Random(seed)
    sources = sources or sorted(SOURCES)
    docs = []
    for i in range(n):
        lang = "zh" if rng.random() < 0.7 else "en"
        source = rng.choice(sources)
        if lang == "zh":
            length = rng.randint(40, 400)
            text = "".join(rng.choice(_ZH_CHARS) for _ in range(length))
        else:
            length = rng.randint(20, 120)
            text = " ".join(rng.choice(_EN_WORDS) for _ in range(length))
        docs.append(Document.create(id=f"doc-{i:06d}", text=text,
                                    lang=lang, source=source))
    return docs
