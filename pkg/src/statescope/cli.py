"""Batch CLI: synth, ingest, pipeline, collage, train, verify, serve.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline, service, synth
from .errors import StatescopeError
from .store import DATA_DIR_ENV, SessionStore
from .traces import session_from_json, session_to_json


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argument misuse is a validation failure
        self.exit(1, f"{self.prog}: error: {message}\n")


def _store(args) -> SessionStore:
    root = args.session_dir or os.environ.get(DATA_DIR_ENV) or "./statescope-data"
    return SessionStore(root)


def _write_out(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_synth(args) -> int:
    if args.device_file:
        device = synth.load_device(args.device_file)
        if not args.script_file:
            raise StatescopeError("--device-file requires --script-file", stage="synth")
        script = synth.load_script(args.script_file)
    else:
        if args.device not in synth.FIXTURES:
            raise StatescopeError(f"unknown device fixture {args.device!r}", stage="synth")
        fixture, script_fn = synth.FIXTURES[args.device]
        device = fixture()
        if args.script_file:
            script = synth.load_script(args.script_file)
        else:
            script = script_fn(windows_per_state=args.windows_per_state, window_ms=args.window_ms)
    session = synth.simulate(
        device,
        script,
        window_ms=args.window_ms,
        seed=args.seed,
        params=synth.SimulationParams(noise_scale=args.noise_scale),
        session_id=args.session_id,
    )
    _write_out(session_to_json(session), args.out)
    return 0


def cmd_ingest(args) -> int:
    store = _store(args)
    if args.session:
        session = session_from_json(Path(args.session).read_text())
        if args.session_id:
            raise StatescopeError("--session-id conflicts with --session (id comes from the file)")
        with store.lock(session.session_id):
            store.save_session(session)
        print(json.dumps({"session_id": session.session_id, "windows": len(session.windows)}))
        return 0
    if not args.session_id:
        raise StatescopeError("ingest needs --session-id (or --session FILE)")
    sid = args.session_id
    with store.lock(sid):
        if not store.exists(sid):
            from .traces import Session

            store.save_session(Session(session_id=sid, windows=(), events=(), labels=()))
        for path, name in (
            (args.power, "power.csv"),
            (args.network, "network.csv"),
            (args.iq_header, "iq_header.json"),
            (args.iq_payload, "iq_payload.f32"),
            (args.spectra, "spectra.json"),
        ):
            if path:
                store.save_raw(sid, name, Path(path).read_bytes())
        if args.events:
            staged = json.loads(Path(args.events).read_text())
            for ev in staged:
                store.stage_event(sid, str(ev["kind"]), int(ev["t_ms"]))
        session = service.rebuild_windows(store, sid, args.window_ms)
    print(json.dumps({"session_id": sid, "windows": len(session.windows), "events": len(session.events)}))
    return 0


def _config_from_args(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        algorithm=args.algorithm,
        embed=args.embed,
        seed=args.seed,
        k=args.k,
        min_pts=args.min_pts,
        eps=args.eps,
        perplexity=args.perplexity,
        n_iter=args.n_iter,
        modalities=tuple(args.modalities.split(",")),
        emanation=args.emanation,
        merge_by_event=args.merge_by_event,
    )


def cmd_pipeline(args) -> int:
    store = _store(args)
    config = _config_from_args(args)
    with store.lock(args.session_id):
        service.store_config(store, args.session_id, config)
    manifest = pipeline.run_pipeline(store, args.session_id, config)
    print(json.dumps({"artifacts": manifest}, sort_keys=True, indent=1))
    return 0


def cmd_collage(args) -> int:
    store = _store(args)
    groups = json.loads(Path(args.groups).read_text())
    out = service.apply_collage(store, args.session_id, groups)
    print(json.dumps(out, sort_keys=True, indent=1))
    return 0


def cmd_train(args) -> int:
    store = _store(args)
    report = service.train_classifier(store, args.session_id, split_seed=args.split_seed)
    print(json.dumps({"holdout": report}, sort_keys=True, indent=1))
    return 0


def cmd_verify(args) -> int:
    store = _store(args)
    replay = None
    if args.replay_file:
        replay = session_from_json(Path(args.replay_file).read_text())
    elif args.replay:
        replay = args.replay
    for doc in service.verification_steps(store, args.session_id, replay):
        print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(_store(args), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="statescope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--session-dir", default=None, help=f"store root (or ${DATA_DIR_ENV})")

    p = sub.add_parser("synth", help="generate a synthetic ground-truth session")
    p.add_argument("--device", default="voice", help="voice | vision (fixtures)")
    p.add_argument("--device-file", default=None, help="JSON device definition")
    p.add_argument("--script-file", default=None, help="JSON scenario script")
    p.add_argument("--windows-per-state", type=int, default=20)
    p.add_argument("--window-ms", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--session-id", default=None)
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="import traces or a session file into the store")
    common(p)
    p.add_argument("--session", default=None, help="session JSON to import directly")
    p.add_argument("--session-id", default=None)
    p.add_argument("--power", default=None)
    p.add_argument("--network", default=None)
    p.add_argument("--iq-header", default=None)
    p.add_argument("--iq-payload", default=None)
    p.add_argument("--spectra", default=None)
    p.add_argument("--events", default=None, help="JSON list of {kind, t_ms}")
    p.add_argument("--window-ms", type=int, default=1000)
    p.set_defaults(func=cmd_ingest)

    defaults = pipeline.PipelineConfig()
    p = sub.add_parser("pipeline", help="run features/embedding/clustering/correlation")
    common(p)
    p.add_argument("--session-id", required=True)
    p.add_argument("--algorithm", default=defaults.algorithm, help="kmeans | dbscan | gmm")
    p.add_argument("--embed", default=defaults.embed, help="tsne | raw")
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--k", type=int, default=defaults.k)
    p.add_argument("--min-pts", type=int, default=defaults.min_pts)
    p.add_argument("--eps", type=float, default=defaults.eps)
    p.add_argument("--perplexity", type=float, default=defaults.perplexity)
    p.add_argument("--n-iter", type=int, default=defaults.n_iter)
    p.add_argument("--modalities", default=",".join(defaults.modalities))
    p.add_argument("--emanation", default=defaults.emanation, help="peaks | raw")
    p.add_argument("--merge-by-event", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("collage", help="apply a state collage from a groups JSON file")
    common(p)
    p.add_argument("--session-id", required=True)
    p.add_argument("--groups", required=True, help='JSON file {"group": ["state", ...]}')
    p.set_defaults(func=cmd_collage)

    p = sub.add_parser("train", help="train the state classifier")
    common(p)
    p.add_argument("--session-id", required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="step-wise verification, JSON-lines on stdout")
    common(p)
    p.add_argument("--session-id", required=True)
    p.add_argument("--replay", default=None, help="stored session id to replay")
    p.add_argument("--replay-file", default=None, help="session JSON file to replay")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("serve", help="run the HTTP API")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui", default=None, help="directory with the built frontend to mount at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StatescopeError as err:
        print(f"error [{err.code} @ {err.stage}]: {err.detail}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
