"""Published corpus compositions encoded as exact integers.

The pretraining corpus table quotes rounded document and token counts
("57.9M", "138B"); those are stored expanded (57_900_000, 138e9 as int) and
validated with a significant-figure rounding rule. The instruction corpus
table is exact sample counts.
"""

from .corpus import CorpusManifest, ManifestEntry

B = 1_000_000_000
M = 1_000_000


def cpt_corpus_manifest() -> CorpusManifest:
    """Pretraining corpus composition: 445B raw tokens sampled down to 140B."""
    entries = [
        ManifestEntry("en", "general_industry", 57_900_000, 138 * B, 20 * B),
        ManifestEntry("en", "legal_political_news", 22_500_000, 39 * B, 20 * B),
        ManifestEntry("zh", "general_industry", 24_300_000, 87 * B, 35 * B),
        ManifestEntry("zh", "legal_political_news", 9_600_000, 22 * B, 11 * B),
        ManifestEntry("zh", "judicial_judgments", 86_400_000, 155 * B, 50 * B),
        ManifestEntry("zh", "articles_interpretations", 1_550_000, 2 * B, 2 * B),
        ManifestEntry("zh", "legal_books_papers", 130_000, 2 * B, 2 * B),
    ]
    # Published totals: 202.4M documents, 445B tokens, 140B sampled.
    return CorpusManifest(
        entries=entries,
        total_documents=202_400_000,
        total_tokens=445 * B,
        total_sampled_tokens=140 * B,
    )


CPT_TOTAL_SAMPLED_TOKENS = 140 * B
CPT_ZH_SAMPLED_TOKENS = 100 * B
CPT_DOMAIN_SAMPLED_TOKENS = 85 * B


def post_training_manifest() -> CorpusManifest:
    """Instruction corpus composition: 1,834,198 {query, golden answer} samples."""
    entries = [
        ManifestEntry("en", "dialogue_qa", 198_847, category="en_general"),
        ManifestEntry("en", "instruction_following", 25_618, category="en_general"),
        ManifestEntry("zh", "dialogue_qa", 589_226, category="zh_general"),
        ManifestEntry("zh", "instruction_following", 402_455, category="zh_general"),
        ManifestEntry("zh", "dialogue_qa", 83_929, category="zh_polilegal"),
        ManifestEntry("zh", "article_memory", 67_913, category="zh_polilegal"),
        ManifestEntry("zh", "polilegal_tasks", 383_953, category="zh_polilegal"),
        ManifestEntry("zh", "document_generation", 82_257, category="zh_polilegal"),
    ]
    return CorpusManifest(
        entries=entries,
        total_documents=1_834_198,
    )


POST_TRAINING_TOTAL_SAMPLES = 1_834_198
POST_TRAINING_EN_GENERAL = 224_465
POST_TRAINING_ZH_GENERAL = 991_681
POST_TRAINING_ZH_POLILEGAL = 618_052
