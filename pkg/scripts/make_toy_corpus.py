import argparse
import json
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from app.corpus.toy import make_toy_corpus  # noqa: E402
from app.store.artifacts import write_jsonl  # noqa: E402


def toy_config(out_dir: Path, seed: int) -> dict:
    """A config small enough to train on a laptop CPU in a few minutes."""
    return {
        "seed": seed,
        "paths": {"corpus": str(out_dir / "toy.jsonl"), "work_dir": str(out_dir / "work")},
        "corpus": {"vocab_cap": 2000, "max_source_tokens": 120, "max_target_tokens": 30},
        "lda": {"topics": 6, "iters": 30, "infer_iters": 20},
        "model": {
            "f": 32, "f_prime": 6, "d": 32, "k": 3, "enc_layers": 2, "dec_layers": 2,
            "max_source_positions": 120, "max_target_positions": 30, "dropout": 0.1,
        },
        "trainer": {"batch_size": 16, "max_epochs": 5},
        "decode": {"beam": 5, "max_len": 30},
    }


def main(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic news corpus and a matching toy config.")
    parser.add_argument("--out-dir", type=Path, default=PROJECT_ROOT / "data" / "toy")
    parser.add_argument("--docs", type=int, default=100, help="Number of documents.")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        count = write_jsonl(args.out_dir / "toy.jsonl", make_toy_corpus(args.docs, args.seed))
        config_path = args.out_dir / "toy.json"
        config_path.write_text(json.dumps(toy_config(args.out_dir, args.seed), indent=2) + "\n", encoding="utf-8")
    except (OSError, ValueError) as exc:
        print(f"❌ Failed to write toy corpus: {exc}")
        return 1

    print(f"✅ {count} documents → {args.out_dir / 'toy.jsonl'}")
    print(f"✅ config → {config_path}")
    print(f"   next: python main.py --config {config_path} preprocess")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
