"""Print the evidence chains and active facts of the bundled case-study questions.

    python scripts/case_studies.py [--config fixtures/casestudy/pipeline.cfg] [--all-choices]
"""
import argparse
from pathlib import Path

from amrsg.config import load_config
from amrsg.pipeline import format_pair, run_pipeline

DEFAULT = Path(__file__).resolve().parent.parent / "fixtures" / "casestudy" / "pipeline.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(DEFAULT))
    ap.add_argument("--all-choices", action="store_true", help="report every choice, not only the gold one")
    args = ap.parse_args()

    for res in run_pipeline(load_config(args.config)):
        gold = res.question.answer_idx
        for pair in res.pairs:
            if args.all_choices or pair.choice_index == gold:
                print(format_pair(pair))


if __name__ == "__main__":
    main()
