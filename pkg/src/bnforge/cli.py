"""Command-line front end.

Commands, one per line (a form may continue over several lines until its
parentheses balance; ``;`` starts a comment)::

    load <path>                 load a ruleset (.bnr); bundled names work too
    assert <form>               assert a ground fact and forward-chain
    query <pattern>             answer a pattern by backward chaining
    marginals [<pattern>|all]   evaluate and print node marginals
    run <path>                  feed a fact script through the commit loop
    export <dot|json> <path>    write the network
    set <option> <value>        change a loop option
    show rules|nodes|cpts       inspect the engine

The first failing command prints ``error[<module>/<Code>]: message`` on
stderr and stops processing; the exit status is then 1.
"""

from __future__ import annotations

import argparse
import sys
from importlib.resources import files
from pathlib import Path
from typing import Optional

import numpy as np

from .dsl import parse_ruleset, parse_term, read, serialize_item, to_term
from .errors import BNForgeError, CommandError
from .report import export_json, marginal_line
from .session import Session
from .terms import Compound, Variable, is_ground, unify

COMMANDS = ("load", "assert", "query", "marginals", "run", "export", "set", "show")


def bundled_ruleset(name: str) -> Optional[Path]:
    stem = name[:-4] if name.endswith(".bnr") else name
    res = files("bnforge.rulesets").joinpath(stem + ".bnr")
    return Path(str(res)) if res.is_file() else None


def split_commands(text: str) -> list:
    """Group lines into commands whose parentheses balance."""
    out, buf, depth = [], [], 0
    for line in text.splitlines():
        code = _strip_comment(line)
        if not buf and not code.strip():
            continue
        buf.append(code)
        depth += _depth(code)
        if depth <= 0:
            out.append(" ".join(b.strip() for b in buf).strip())
            buf, depth = [], 0
    if buf:
        out.append(" ".join(b.strip() for b in buf).strip())
    return out


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == ";" and not in_str:
            return line[:i]
    return line


def _depth(code: str) -> int:
    d, in_str = 0, False
    for ch in code:
        if ch == '"':
            in_str = not in_str
        elif not in_str:
            d += (ch == "(") - (ch == ")")
    return d


class Shell:
    """Executes commands against one session and collects their output."""

    def __init__(self, session: Optional[Session] = None, base_dir: Optional[Path] = None,
                 seed: Optional[int] = None):
        self.session = session or Session()
        self.base_dir = base_dir or Path.cwd()
        # only consumed by randomized generators driven from Python
        self.rng = np.random.default_rng(seed)

    @property
    def engine(self):
        return self.session.engine

    def execute(self, command: str) -> tuple:
        """Run one command; returns (output text, exit status)."""
        try:
            return self._dispatch(command), 0
        except BNForgeError as exc:
            return f"error[{exc.code}]: {exc}\n", 1

    def _dispatch(self, command: str) -> str:
        word, _, rest = command.strip().partition(" ")
        rest = rest.strip()
        if word not in COMMANDS:
            raise CommandError(f"unknown command {word!r}; expected one of {', '.join(COMMANDS)}")
        return getattr(self, "cmd_" + word)(rest)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        for cand in (p, self.base_dir / p):
            if cand.is_file():
                return cand
        found = bundled_ruleset(path)
        if found is not None:
            return found
        raise CommandError(f"no such file: {path}")

    def _read(self, path: str) -> str:
        try:
            return self.resolve(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CommandError(f"cannot read {path}: {exc}") from None

    def _form(self, text: str, what: str):
        if not text:
            raise CommandError(f"{what} needs a form")
        return parse_term(text)

    # -- commands ------------------------------------------------------------

    def cmd_load(self, rest: str) -> str:
        self.engine.load(parse_ruleset(self._read(rest)))
        return ""

    def cmd_assert(self, rest: str) -> str:
        self.engine.assert_fact(self._form(rest, "assert"))
        return ""

    def cmd_query(self, rest: str) -> str:
        q = self._form(rest, "query")
        qvars = list(dict.fromkeys(_vars_in_order(q)))
        lines = []
        for s in self.engine.answer_query(q):
            if not qvars:
                lines.append("yes")
                break
            lines.append(" ".join(f"{v.name}={s[v]}" for v in qvars if v in s))
        if not lines:
            lines.append("no")
        return "\n".join(lines) + "\n"

    def cmd_marginals(self, rest: str) -> str:
        pattern = None if rest in ("", "all") else self._form(rest, "marginals")
        marg = self.session.evaluate_all()
        lines = []
        for nid in sorted(self.session.graph.nodes):
            node = self.session.graph.nodes[nid]
            if pattern is None or unify(pattern, node.statement.term) is not None:
                lines.append(marginal_line(node, marg[nid]))
        return "".join(line + "\n" for line in lines)

    def cmd_run(self, rest: str) -> str:
        forms = [to_term(x) for x in read(self._read(rest))]
        for t in forms:
            if not is_ground(t):
                raise CommandError(f"run script contains non-ground form {t}")
        before = len(self.session.commits)
        result = self.session.run_loop(forms)
        lines = []
        for ev in result.commits[before:]:
            lines.append(f"{ev.action} {ev.statement} = {ev.state} [p={ev.probability:.9f}]")
        return "".join(line + "\n" for line in lines)

    def cmd_export(self, rest: str) -> str:
        fmt, _, path = rest.partition(" ")
        path = path.strip()
        if fmt not in ("dot", "json") or not path:
            raise CommandError("usage: export dot|json <path>")
        text = self.export_text(fmt)
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CommandError(f"cannot write {path}: {exc}") from None
        return ""

    def export_text(self, fmt: str) -> str:
        if fmt == "dot":
            return self.session.graph.to_dot()
        marg = self.session.evaluate_all()
        return export_json(self.session.graph, self.engine.cpts, marg)

    def cmd_set(self, rest: str) -> str:
        name, _, value = rest.partition(" ")
        if "=" in name and not value:
            name, _, value = name.partition("=")
        if not value.strip():
            raise CommandError("usage: set <option> <value>")
        self.session.set_option(name, value.strip())
        return ""

    def cmd_show(self, rest: str) -> str:
        if rest == "rules":
            return "".join(serialize_item(r) + "\n" for r in self.engine.rules)
        if rest == "nodes":
            g = self.session.graph
            lines = []
            for nid in sorted(g.nodes):
                n = g.nodes[nid]
                parents = " ".join(g.nodes[p].name for p in n.parents)
                lines.append(f"n{nid} {n.name} states=({' '.join(n.states)}) parents=[{parents}]")
            return "".join(line + "\n" for line in lines)
        if rest == "cpts":
            self.engine.build_cpts()
            g = self.session.graph
            lines = []
            for nid in sorted(g.nodes):
                cpt = self.engine.cpts[nid]
                parents = " ".join(g.nodes[p].name for p in cpt.parent_order)
                lines.append(f"{g.nodes[nid].name} | {parents}".rstrip(" |"))
                for ps, row in cpt.rows():
                    probs = " ".join(f"{s}={p:.9f}" for s, p in zip(cpt.states, row))
                    lines.append(f"  ({' '.join(ps)}) :: {probs}")
            return "".join(line + "\n" for line in lines)
        raise CommandError("usage: show rules|nodes|cpts")


def _vars_in_order(t):
    if isinstance(t, Compound):
        for a in t.args:
            yield from _vars_in_order(a)
    elif isinstance(t, Variable):
        yield t


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bnforge", description="Build belief networks from rules and query them.")
    ap.add_argument("--rules", action="append", default=[], metavar="PATH", help="ruleset to load (repeatable)")
    ap.add_argument("--script", metavar="PATH", help="file of commands to execute")
    ap.add_argument("--eval", action="append", default=[], metavar="COMMAND", help="command to execute (repeatable)")
    ap.add_argument("--export", action="append", default=[], metavar="FMT:PATH", help="write the network at the end (dot or json)")
    ap.add_argument("--set", action="append", default=[], metavar="OPT=VAL", help="loop option")
    ap.add_argument("--seed", type=int, help="seed for randomized generators")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    shell = Shell(seed=args.seed)
    commands = []
    for opt in args.set:
        name, eq, value = opt.partition("=")
        if not eq:
            print(f"error[cli/CommandError]: --set expects OPT=VAL, got {opt!r}", file=sys.stderr)
            return 1
        commands.append(f"set {name} {value}")
    commands += [f"load {p}" for p in args.rules]
    if args.script:
        try:
            script = Path(args.script).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error[cli/CommandError]: cannot read {args.script}: {exc}", file=sys.stderr)
            return 1
        shell.base_dir = Path(args.script).resolve().parent
        commands += split_commands(script)
    for cmd in args.eval:
        commands += split_commands(cmd)
    for spec in args.export:
        fmt, sep, path = spec.partition(":")
        commands.append(f"export {fmt} {path}" if sep else f"export {spec}")
    if not (args.rules or args.script or args.eval or args.export):
        return repl(shell, commands)
    return _run_all(shell, commands)


def _run_all(shell: Shell, commands: list) -> int:
    for cmd in commands:
        out, status = shell.execute(cmd)
        if status:
            sys.stdout.flush()
            sys.stderr.write(out)
            return status
        sys.stdout.write(out)
    return 0


def repl(shell: Shell, commands: list) -> int:
    """Same command set, read from stdin (with a prompt on a terminal)."""
    status = _run_all(shell, commands)
    if status:
        return status
    interactive = sys.stdin.isatty()
    buf = ""
    while True:
        if interactive:
            sys.stdout.write("bnforge> " if not buf else "...> ")
            sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            break
        buf += line
        if _depth(_strip_comment(buf)) > 0:
            continue
        for cmd in split_commands(buf):
            out, status = shell.execute(cmd)
            if status:
                sys.stderr.write(out)
                if not interactive:
                    return status
            else:
                sys.stdout.write(out)
        buf = ""
    return status


if __name__ == "__main__":
    sys.exit(main())
