import argparse
import sys

from .extract import DEFAULT_TEMPLATE, ExtractJob, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedgrab",
        description="Export an image dataset as unit-norm embedding files",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="run an extraction job")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="encoder name, e.g. rp-256")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--template", default=DEFAULT_TEMPLATE,
                   help="class prompt template with one [category] slot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractJob(dataset_name=args.dataset, model_name=args.model,
                         output_directory=args.out,
                         prompt_template=args.template)
        paths = run(job)
    except (KeyError, ValueError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
