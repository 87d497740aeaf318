"""Command-line entry point: script runner, REPL and protocol server."""

from __future__ import annotations

import argparse
import sys

from .notation import split_source
from .session import Session, SessionError, run_script


def _cmd_run(args) -> int:
    status, transcript = run_script(args.script,
                                    default_rules=args.default_rules,
                                    keep_going=args.keep_going)
    sys.stdout.write(transcript)
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            fh.write(transcript)
    return status


def _cmd_repl(args) -> int:
    session = Session(default_rules=args.default_rules)
    print("tensorpad; lines end with ';' (echo) or '.' (silent); "
          "Ctrl-D quits.")
    buffer = ""
    while True:
        try:
            prompt = "> " if not buffer else "... "
            buffer += input(prompt) + "\n"
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print()
            buffer = ""
            continue
        pieces = split_source(buffer)
        if not pieces:
            continue
        if not buffer.rstrip().endswith((";", ".")):
            continue
        buffer = ""
        for body, _line, terminator in pieces:
            try:
                out = session.eval_line(body, terminator)
                if out:
                    print(out)
            except SessionError as err:
                print(f"error: {err}")


def _cmd_serve(args) -> int:
    if args.stdio:
        from .protocol import serve_stream
        serve_stream(Session(default_rules=args.default_rules),
                     sys.stdin, sys.stdout)
        return 0
    from .protocol import serve_tcp
    serve_tcp(port=args.port, default_rules=args.default_rules,
              announce=lambda p: print(f"listening on 127.0.0.1:{p}",
                                       flush=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tensorpad",
        description="Scratch-pad computer algebra for tensor field theory.")
    sub = parser.add_subparsers(dest="mode", required=True)

    p_run = sub.add_parser("run", help="evaluate a script file")
    p_run.add_argument("script")
    p_run.add_argument("--keep-going", action="store_true",
                       help="continue past errors")
    p_run.add_argument("--transcript", metavar="PATH",
                       help="also write the transcript to a file")
    p_run.add_argument("--default-rules", action="store_true",
                       help="apply prodsort/rename_dummies/canonicalise/"
                            "collect_terms after every command")
    p_run.set_defaults(fn=_cmd_run)

    p_repl = sub.add_parser("repl", help="interactive session")
    p_repl.add_argument("--default-rules", action="store_true")
    p_repl.set_defaults(fn=_cmd_repl)

    p_serve = sub.add_parser("serve", help="protocol server for frontends")
    p_serve.add_argument("--port", type=int, default=0,
                         help="TCP port (0 picks a free one)")
    p_serve.add_argument("--stdio", action="store_true",
                         help="serve on stdin/stdout instead of TCP")
    p_serve.add_argument("--default-rules", action="store_true")
    p_serve.set_defaults(fn=_cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
