"""``pc`` command-line driver.

stdout carries data, stderr carries diagnostics. Exit codes are a closed
set:

  0   success
  1   unexpected/internal error
  2   name_conflict
  3   unknown_workspace / unknown_widget
  4   invalid input (empty text/title/prompt/name, bad index)
  5   provider unavailable / auth failure
  6   schema_violation_exhausted
  7   missing_fixture / fixture_write_error
  8   expectation or scenario failure
  64  usage error
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .errors import PromptCanvasError
from .gateway import Gateway, StreamEvent, provider_from_env
from .scenario import (
    HttpBackend,
    InProcessBackend,
    ScenarioParseError,
    parse_scenario,
    run_scenario,
)
from .service import FlowService
from .store import WorkspaceStore

EXIT_CODES = {
    "name_conflict": 2,
    "unknown_workspace": 3,
    "unknown_widget": 3,
    "empty_name": 4,
    "empty_text": 4,
    "empty_title": 4,
    "empty_prompt": 4,
    "empty_value": 4,
    "empty_option": 4,
    "index_out_of_range": 4,
    "no_active_widgets": 4,
    "flow_in_progress": 4,
    "provider_unavailable": 5,
    "auth_failure": 5,
    "schema_violation_exhausted": 6,
    "missing_fixture": 7,
    "fixture_write_error": 7,
    "scenario_parse_error": 8,
    "expectation_failure": 8,
}

USAGE_EXIT = 64
click.exceptions.UsageError.exit_code = USAGE_EXIT


def _fail(exc: PromptCanvasError):
    click.echo(f"error [{exc.code}]: {exc.message}", err=True)
    sys.exit(EXIT_CODES.get(exc.code, 1))


def _make_service(data_dir: str | None, provider_mode: str | None) -> FlowService:
    env = dict(os.environ)
    if data_dir:
        env["PC_DATA_DIR"] = data_dir
    if provider_mode:
        env["PC_PROVIDER_MODE"] = provider_mode
    store = WorkspaceStore.from_env(env)
    provider = provider_from_env(env)
    return FlowService(store, Gateway(provider))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--data-dir", default=None, help="Override PC_DATA_DIR.")
@click.option("--provider-mode", default=None,
              type=click.Choice(["live", "replay", "record"]),
              help="Override PC_PROVIDER_MODE.")
@click.pass_context
def main(ctx, data_dir, provider_mode):
    """Composable prompting workspace: flows, workspaces, scenarios, fixtures."""
    ctx.obj = {"data_dir": data_dir, "provider_mode": provider_mode}


def _service(ctx) -> FlowService:
    return _make_service(ctx.obj["data_dir"], ctx.obj["provider_mode"])


def _store(ctx) -> WorkspaceStore:
    env = dict(os.environ)
    if ctx.obj["data_dir"]:
        env["PC_DATA_DIR"] = ctx.obj["data_dir"]
    return WorkspaceStore.from_env(env)


# -- workspace ----------------------------------------------------------------

@main.group()
def workspace():
    """Workspace lifecycle: create, list, rename, duplicate, delete."""


@workspace.command("create")
@click.argument("name")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def workspace_create(ctx, name, as_json):
    try:
        ws = _store(ctx).create_workspace(name)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(json.dumps(ws.to_dict()) if as_json else ws.id)


@workspace.command("list")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def workspace_list(ctx, as_json):
    try:
        summaries = _store(ctx).list_workspaces()
    except PromptCanvasError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps([s.to_dict() for s in summaries]))
    else:
        for s in summaries:
            click.echo(f"{s.id}\t{s.name}\t{s.widget_count} widgets")


@workspace.command("rename")
@click.argument("workspace_id")
@click.argument("new_name")
@click.pass_context
def workspace_rename(ctx, workspace_id, new_name):
    try:
        ws = _store(ctx).rename_workspace(workspace_id, new_name)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(ws.name)


@workspace.command("duplicate")
@click.argument("workspace_id")
@click.argument("new_name")
@click.pass_context
def workspace_duplicate(ctx, workspace_id, new_name):
    try:
        ws = _store(ctx).duplicate_workspace(workspace_id, new_name)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(ws.id)


@workspace.command("delete")
@click.argument("workspace_id")
@click.pass_context
def workspace_delete(ctx, workspace_id):
    try:
        _store(ctx).delete_workspace(workspace_id)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(f"deleted {workspace_id}")


# -- flows --------------------------------------------------------------------

@main.group()
def flow():
    """Run one of the five orchestration flows end to end."""


def _print_delta(event: StreamEvent):
    if event.kind == "delta":
        click.echo(event.payload, nl=False)
        sys.stdout.flush()


@flow.command("generate-widgets")
@click.option("--workspace", "workspace_id", required=True)
@click.option("--guiding-prompt", default=None)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def flow_generate_widgets(ctx, workspace_id, guiding_prompt, as_json):
    try:
        created = _service(ctx).generate_widgets(workspace_id, guiding_prompt)
    except PromptCanvasError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps([w.to_dict() for w in created]))
    else:
        for w in created:
            click.echo(f"{w.id}\t{w.title}\t{w.value}")


@flow.command("suggest-options")
@click.option("--workspace", "workspace_id", required=True)
@click.option("--widget", "widget_id", required=True)
@click.option("--guiding-prompt", default=None)
@click.pass_context
def flow_suggest_options(ctx, workspace_id, widget_id, guiding_prompt):
    try:
        widget = _service(ctx).suggest_options(workspace_id, widget_id, guiding_prompt)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(json.dumps(widget.to_dict()))


@flow.command("extract")
@click.option("--workspace", "workspace_id", required=True)
@click.option("--widget", "widget_id", required=True)
@click.pass_context
def flow_extract(ctx, workspace_id, widget_id):
    try:
        widget = _service(ctx).extract_value(workspace_id, widget_id)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(json.dumps(widget.to_dict()))


@flow.command("rephrase")
@click.option("--workspace", "workspace_id", required=True)
@click.pass_context
def flow_rephrase(ctx, workspace_id):
    try:
        _service(ctx).rephrase(workspace_id, _print_delta)
    except PromptCanvasError as exc:
        click.echo("", err=False)
        _fail(exc)
    click.echo("")


@flow.command("prompt")
@click.option("--workspace", "workspace_id", required=True)
@click.option("--prompt", required=True)
@click.pass_context
def flow_prompt(ctx, workspace_id, prompt):
    try:
        _service(ctx).apply_prompt(workspace_id, prompt, _print_delta)
    except PromptCanvasError as exc:
        click.echo("", err=False)
        _fail(exc)
    click.echo("")


# -- scenarios ----------------------------------------------------------------

@main.group()
def scenario():
    """Run scripted end-to-end scenarios."""


@scenario.command("run")
@click.argument("script_file", type=click.Path(exists=True))
@click.option("--http", "http_url", default=None,
              help="Run against a server instead of in-process.")
@click.pass_context
def scenario_run(ctx, script_file, http_url):
    try:
        scn = parse_scenario(script_file)
    except (ScenarioParseError, Exception) as exc:
        if isinstance(exc, PromptCanvasError):
            _fail(exc)
        click.echo(f"error [scenario_parse_error]: {exc}", err=True)
        sys.exit(EXIT_CODES["scenario_parse_error"])

    if http_url:
        backend = HttpBackend(http_url)
    else:
        try:
            backend = InProcessBackend(_service(ctx))
        except PromptCanvasError as exc:
            _fail(exc)

    def report(result):
        status = "PASS" if result.ok else "FAIL"
        click.echo(f"[{status}] step {result.step.index}: {result.step.action}"
                   + (f" — {result.message}" if result.message else ""))

    try:
        run_scenario(scn, backend, report)
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(f"scenario '{scn.name}': all {len(scn.steps)} steps passed")


# -- fixtures -----------------------------------------------------------------

@main.group()
def fixture():
    """Record or verify replay fixtures for a scenario."""


@fixture.command("record")
@click.argument("script_file", type=click.Path(exists=True))
@click.option("--fixture-path", required=True, type=click.Path())
@click.pass_context
def fixture_record(ctx, script_file, fixture_path):
    """Run the scenario against the live provider, recording every exchange."""
    env = dict(os.environ)
    env["PC_PROVIDER_MODE"] = "record"
    env["PC_FIXTURE_PATH"] = fixture_path
    if ctx.obj["data_dir"]:
        env["PC_DATA_DIR"] = ctx.obj["data_dir"]
    try:
        store = WorkspaceStore.from_env(env)
        provider = provider_from_env(env)
        service = FlowService(store, Gateway(provider))
        scn = parse_scenario(script_file)
        run_scenario(scn, InProcessBackend(service))
    except PromptCanvasError as exc:
        _fail(exc)
    click.echo(f"recorded fixtures to {fixture_path}")


@fixture.command("verify")
@click.argument("script_file", type=click.Path(exists=True))
@click.option("--fixture-path", required=True, type=click.Path(exists=True))
@click.option("--data-dir", "data_dir", default=None)
@click.pass_context
def fixture_verify(ctx, script_file, fixture_path, data_dir):
    """Re-run the scenario in replay mode, asserting full digest coverage."""
    import tempfile

    env = dict(os.environ)
    env["PC_PROVIDER_MODE"] = "replay"
    env["PC_FIXTURE_PATH"] = fixture_path
    with tempfile.TemporaryDirectory() as tmp:
        env["PC_DATA_DIR"] = data_dir or ctx.obj["data_dir"] or tmp
        try:
            store = WorkspaceStore.from_env(env)
            provider = provider_from_env(env)
            service = FlowService(store, Gateway(provider))
            scn = parse_scenario(script_file)
            run_scenario(scn, InProcessBackend(service))
        except PromptCanvasError as exc:
            # surface the underlying missing digest, not the step wrapper
            cause = exc
            while cause is not None:
                if getattr(cause, "code", "") == "missing_fixture":
                    _fail(cause)
                cause = cause.__cause__
            _fail(exc)
    click.echo("fixture verified: all digests covered")


# -- server -------------------------------------------------------------------

@main.command("serve")
@click.option("--bind", default=None, help="host:port (default PC_BIND_ADDR or 127.0.0.1:8700)")
@click.pass_context
def serve(ctx, bind):
    """Serve the HTTP API (and the frontend if built)."""
    import uvicorn

    from .api import create_app

    addr = bind or os.environ.get("PC_BIND_ADDR", "127.0.0.1:8700")
    host, _, port = addr.rpartition(":")
    try:
        service = _service(ctx)
    except PromptCanvasError as exc:
        _fail(exc)
    app = create_app(service)
    frontend_dist = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if frontend_dist.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="ui")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
