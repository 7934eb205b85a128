"""Regenerate the checked-in test fixtures under tests/data/.

Everything here is deterministic (hand-picked literals, no RNG), so
rerunning the script reproduces the committed files byte for byte. The
corpus holds exactly 100 tokens with 7 out-of-vocabulary tokens planted
in it: 5 named entities (Messi, PHP, Sputnik, NASA, Stuart) and 2 content
words (nymphs, folksong). Sputnik intentionally has no source embedding,
which forces the verbatim fallback path under the bwe policies.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bwelex import (  # noqa: E402
    BilinearModel,
    EmbeddingStore,
    MarkupPolicy,
    annotate_corpus,
    load_system_vocabulary,
    read_corpus,
    save_embeddings,
    save_model,
    write_corpus,
    write_oov_report,
)

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"

OOV_TOKENS = {"Messi", "PHP", "Sputnik", "NASA", "Stuart", "nymphs", "folksong"}

CORPUS = [
    "the old scholar spoke about Messi while the children listened to a "
    "quiet folksong near the river in spring .",
    "many servers still run PHP because the old code works and nobody "
    "really wants to rewrite it this year .",
    "the museum guide pointed at Sputnik and explained how the small "
    "satellite had changed history for everyone back then .",
    "reports from NASA described the mission while painters drew shy "
    "nymphs dancing in a forest under the pale moon .",
    "the historian wrote that young Stuart travelled north with two "
    "loyal friends and a very old map that autumn .",
]

# Four interpretable axes: creature, music, person-name, organization.
SOURCE_VECTORS = {
    "nymphs": (1.0, 0.1, 0.0, 0.0),
    "folksong": (0.1, 1.0, 0.0, 0.0),
    "Messi": (0.0, 0.0, 1.0, 0.2),
    "Stuart": (0.0, 0.0, 0.8, -0.5),
    "PHP": (0.0, 0.0, 0.5, 0.8),
    "NASA": (0.0, 0.1, -0.2, 0.9),
    "music": (0.0, 0.9, 0.1, 0.0),
    "the": (0.2, 0.2, 0.2, 0.2),
}

TARGET_VECTORS = {
    "ninfas": (1.0, 0.0, 0.0, 0.0),
    "ninfa": (0.8, 0.1, 0.0, 0.0),
    "criaturas": (0.6, 0.0, 0.1, 0.0),
    "música": (0.0, 1.0, 0.0, 0.0),
    "folclore": (0.1, 0.8, 0.0, 0.0),
    "canción": (0.0, 0.7, 0.0, 0.1),
    "Mesi": (0.0, 0.0, 1.0, 0.1),
    "Estuardo": (0.0, 0.0, 0.8, -0.3),
    "Guillermo": (0.0, 0.0, 0.5, 0.6),
    "Enrique": (0.0, 0.0, 0.3, 0.7),
}

DICTIONARY = [
    ("nymphs", "ninfas"),
    ("folksong", "folclore"),
    ("Messi", "Mesi"),
    ("Stuart", "Estuardo"),
    ("PHP", "Enrique"),
    ("NASA", "Guillermo"),
    ("music", "música"),
    ("the", "criaturas"),
]

POLICIES = {
    "none": MarkupPolicy(mode="none"),
    "verbatim": MarkupPolicy(mode="verbatim"),
    "bwe_all": MarkupPolicy(mode="bwe_all", top_n=3, add_verbatim_option=True),
    "bwe_cw": MarkupPolicy(mode="bwe_cw", top_n=3, add_verbatim_option=True),
}


def build_stores():
    src = EmbeddingStore(
        "src", list(SOURCE_VECTORS), np.array(list(SOURCE_VECTORS.values()))
    )
    tgt = EmbeddingStore(
        "tgt", list(TARGET_VECTORS), np.array(list(TARGET_VECTORS.values()))
    )
    return src, tgt


def main():
    DATA.mkdir(parents=True, exist_ok=True)

    tokens = [t for line in CORPUS for t in line.split()]
    assert len(tokens) == 100, f"corpus has {len(tokens)} tokens, want 100"
    planted = [t for t in tokens if t in OOV_TOKENS]
    assert len(planted) == 7, f"{len(planted)} planted OOV occurrences, want 7"

    (DATA / "corpus.txt").write_text(
        "\n".join(CORPUS) + "\n", encoding="utf-8"
    )
    vocab_tokens = sorted(set(tokens) - OOV_TOKENS)
    (DATA / "sysvocab.txt").write_text(
        "\n".join(vocab_tokens) + "\n", encoding="utf-8"
    )
    (DATA / "dict.tsv").write_text(
        "".join(f"{e}\t{f}\n" for e, f in DICTIONARY), encoding="utf-8"
    )

    src, tgt = build_stores()
    save_embeddings(src, DATA / "emb_src.txt")
    save_embeddings(tgt, DATA / "emb_tgt.txt")

    model = BilinearModel(np.eye(4), src, tgt)
    save_model(model, DATA / "markup_model.bin")

    corpus = read_corpus(DATA / "corpus.txt")
    vocab = load_system_vocabulary(DATA / "sysvocab.txt")
    for name, policy in POLICIES.items():
        needs_model = policy.mode in ("bwe_all", "bwe_cw")
        lines, summary = annotate_corpus(
            corpus, vocab, policy, model=model if needs_model else None
        )
        write_corpus(lines, DATA / f"golden_markup_{name}.txt")
        write_oov_report(summary.report, DATA / f"golden_report_{name}.txt")
        print(
            f"{name}: marked {summary.marked_tokens}, "
            f"fallbacks {summary.verbatim_fallbacks}"
        )

    print(f"fixtures written to {DATA}")


if __name__ == "__main__":
    main()
