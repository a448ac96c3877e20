import sys
from typing import List, Sequence

from app.cli import run

PIPELINE_STEPS = ["preprocess", "train-lda", "train", "baselines"]


def run_pipeline(global_args: Sequence[str] = ()) -> int:
    """Chains preprocess → train-lda → train → baselines with shared global flags
    (``--config``, ``--seed``, ``--work-dir``). Stops at the first failing step."""
    for command in PIPELINE_STEPS:
        print(f"\n##### {command} #####")
        code = run([*global_args, command])
        if code != 0:
            print(f"❌ Pipeline stopped at '{command}' (exit {code}).")
            return code
    print("\n✅ Pipeline completed.")
    return 0


def main(argv: List[str]) -> int:
    if argv and argv[0] == "pipeline":
        return run_pipeline(argv[1:])
    return run(argv)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
