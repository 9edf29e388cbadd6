"""Command-line interface.

Each subcommand exposes one pipeline stage on explicit input/output paths;
``run`` chains them. Stage outputs are byte-identical whether produced by
``run`` or by the individual subcommands with the same config and seed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .config import load_config
from .errors import VideoloomError
from .ingest import parse_detections, serialize_detections
from .pipeline import (
    OUTPUT_NAMES,
    clip_id_for,
    run_pipeline,
    stage_filter,
    stage_ingest,
    stage_taskgen,
    stage_tpl,
    stage_track,
    video_dims,
    write_lines,
)
from .records import ClipSpec
from .rewardgap import BUILTIN_SCHEDULES, RewardModel, render_table, serialize_rows, sweep
from .synth import scene_configs_from_toml, synth_scene
from .tpl import parse_tpl, serialize_tpl, subset_stats
from .tracker import parse_tracks, serialize_tracks

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _fail(exc: Exception) -> "click.ClickException":
    return click.ClickException(str(exc))


def _load_clips(path: str) -> list[tuple[str, ClipSpec]]:
    clips = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            clip_id = data.pop("clip_id", None)
            spec = ClipSpec.from_dict(data)
            clips.append((clip_id or clip_id_for(spec.video_id, 0), spec))
    return clips


def _read_frames(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_detections(fh)


config_option = click.option("--config", "config_path", type=click.Path(), default=None, help="Config TOML.")
set_option = click.option("--set", "overrides", multiple=True, metavar="STAGE.KEY=VALUE", help="Config override.")
seed_option = click.option("--seed", type=int, default=0, show_default=True, help="Run seed (u64).")
out_option = click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory.")


@click.group()
@click.version_option(version=__version__, prog_name="videoloom")
def main() -> None:
    """Trajectory-grounded conversation data and temporal-dependence diagnostics."""


@main.command()
@click.option("--scenes", "scenes_path", type=click.Path(), default=None, help="Scenes TOML.")
@click.option("--preset", type=click.Choice(["corpus20"]), default=None, help="Bundled scenes preset.")
@out_option
@seed_option
def synth(scenes_path: str | None, preset: str | None, out_dir: str, seed: int) -> None:
    """Generate a synthetic detections corpus with ground-truth tracks."""
    if (scenes_path is None) == (preset is None):
        raise click.UsageError("pass exactly one of --scenes or --preset")
    try:
        if preset is not None:
            from importlib import resources

            raw = resources.files("videoloom.data").joinpath(f"{preset}.toml").read_bytes()
        else:
            raw = Path(scenes_path).read_bytes()
        configs = scene_configs_from_toml(tomllib.loads(raw.decode("utf-8")), seed)
        detections = []
        truth = []
        for config in configs:
            frames, gt = synth_scene(config)
            detections.extend(serialize_detections(frames))
            truth.extend(serialize_tracks(gt))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / "detections.jsonl", detections)
        write_lines(out / "ground_truth.jsonl", truth)
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"wrote {out / 'detections.jsonl'} ({len(configs)} videos)")


@main.command()
@click.option("--input", "inputs", type=click.Path(), multiple=True, required=True, help="Detections file(s).")
@out_option
@seed_option
@config_option
@set_option
def ingest(inputs: tuple[str, ...], out_dir: str, seed: int, config_path: str | None, overrides) -> None:
    """Parse + validate detections and sample clips."""
    try:
        config = load_config(config_path, overrides)
        frames, clips = stage_ingest(inputs, config, seed)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / OUTPUT_NAMES["frames"], serialize_detections(frames))
        write_lines(
            out / OUTPUT_NAMES["clips"],
            (json.dumps({"clip_id": cid, **spec.to_dict()}, ensure_ascii=False) for cid, spec in clips),
        )
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"ingested {len(frames)} frames, sampled {len(clips)} clips")


@main.command()
@click.option("--frames", "frames_path", type=click.Path(), required=True)
@click.option("--clips", "clips_path", type=click.Path(), required=True)
@out_option
@config_option
@set_option
def track(frames_path: str, clips_path: str, out_dir: str, config_path: str | None, overrides) -> None:
    """Associate clip detections into subject trajectories."""
    try:
        config = load_config(config_path, overrides)
        frames = _read_frames(frames_path)
        clips = _load_clips(clips_path)
        tracks = stage_track(frames, clips, config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / OUTPUT_NAMES["tracks"], serialize_tracks(tracks))
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"associated {len(tracks)} trajectories over {len(clips)} clips")


@main.command("filter")
@click.option("--tracks", "tracks_path", type=click.Path(), required=True)
@click.option("--frames", "frames_path", type=click.Path(), required=True, help="For per-video frame dims.")
@out_option
@config_option
@set_option
def filter_cmd(tracks_path: str, frames_path: str, out_dir: str, config_path: str | None, overrides) -> None:
    """Apply the trajectory quality gates."""
    try:
        config = load_config(config_path, overrides)
        with open(tracks_path, encoding="utf-8") as fh:
            tracks = parse_tracks(fh)
        dims = video_dims(_read_frames(frames_path))
        kept, report = stage_filter(tracks, dims, config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / OUTPUT_NAMES["tracks_kept"], serialize_tracks(kept))
        write_lines(out / OUTPUT_NAMES["filter_report"], (json.dumps(e, ensure_ascii=False) for e in report))
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"kept {len(kept)}/{len(tracks)} trajectories")


@main.command("gen-tasks")
@click.option("--tracks", "tracks_path", type=click.Path(), required=True, help="Filtered tracks file.")
@click.option("--clips", "clips_path", type=click.Path(), required=True)
@click.option("--frames", "frames_path", type=click.Path(), required=True, help="For per-video frame dims.")
@out_option
@seed_option
@config_option
@set_option
def gen_tasks(
    tracks_path: str, clips_path: str, frames_path: str, out_dir: str, seed: int, config_path: str | None, overrides
) -> None:
    """Render bidirectional-query conversations from trajectories."""
    try:
        config = load_config(config_path, overrides)
        with open(tracks_path, encoding="utf-8") as fh:
            kept = parse_tracks(fh)
        clips = _load_clips(clips_path)
        dims = video_dims(_read_frames(frames_path))
        records, report = stage_taskgen(kept, clips, dims, config, seed)
        from .taskgen import serialize_conversations

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / OUTPUT_NAMES["conversations"], serialize_conversations(records))
        write_lines(out / OUTPUT_NAMES["taskgen_report"], (json.dumps(e, ensure_ascii=False) for e in report))
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"generated {len(records)} conversations ({len(report)} skipped)")


@main.command()
@click.option("--nll", "nll_path", type=click.Path(), required=True, help="NLL records file.")
@out_option
@config_option
@set_option
def tpl(nll_path: str, out_dir: str, config_path: str | None, overrides) -> None:
    """Score temporal perplexity and bucket into terciles."""
    try:
        config = load_config(config_path, overrides)
        scores, report = stage_tpl(nll_path, config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_lines(out / OUTPUT_NAMES["tpl"], serialize_tpl(scores))
        write_lines(out / OUTPUT_NAMES["tpl_report"], (json.dumps(e, ensure_ascii=False) for e in report))
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(f"scored {len(scores)} samples ({len(report)} reported)")


@main.command()
@click.option("--tpl", "tpl_path", type=click.Path(), required=True, help="Scored tpl file.")
@click.option("--tags", "tags_path", type=click.Path(), required=True, help="sample_id -> subset tags file.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Also write the table here.")
def stats(tpl_path: str, tags_path: str, out_path: str | None) -> None:
    """Per-subset score statistics, sorted by mean descending."""
    try:
        with open(tpl_path, encoding="utf-8") as fh:
            scores = parse_tpl(fh)
        tags = {}
        with open(tags_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    data = json.loads(line)
                    tags[str(data["sample_id"])] = str(data["subset"])
        rows = subset_stats(scores, tags)
    except VideoloomError as exc:
        raise _fail(exc)
    header = "subset\tcount\tmean\tstdev\tmin\tmax"
    lines = [header] + [
        f"{r['subset']}\t{r['count']}\t{r['mean']:.6f}\t{r['stdev']:.6f}\t{r['min']:.6f}\t{r['max']:.6f}"
        for r in rows
    ]
    text = "\n".join(lines)
    click.echo(text)
    if out_path:
        write_lines(Path(out_path), lines)


@main.command("reward-gap")
@click.option("--preset", type=click.Choice(["monotonicity"]), default=None, help="Bundled sweep grid.")
@click.option("--t-max", type=int, default=None, help="Sweep horizons 1..T_MAX.")
@click.option("--gammas", default=None, help="Comma-separated discount factors.")
@click.option("--policies", default=None, help="Comma-separated schedule names (full,half,single).")
@click.option("--records", "records_path", type=click.Path(), default=None, help="Also write rows as JSONL.")
def reward_gap_cmd(preset, t_max, gammas, policies, records_path) -> None:
    """Objective-gap sweep table over (T, gamma, k-schedule)."""
    try:
        if preset == "monotonicity" or (preset is None and t_max is None and gammas is None and policies is None):
            horizons = list(range(1, 11))
            gamma_set = [0.5, 0.9, 1.0]
            names = ["full", "half", "single"]
        else:
            horizons = list(range(1, (t_max or 10) + 1))
            gamma_set = [float(g) for g in (gammas or "0.5,0.9,1.0").split(",")]
            names = (policies or "full,half,single").split(",")
        try:
            schedules = [BUILTIN_SCHEDULES[name.strip()] for name in names]
        except KeyError as exc:
            raise click.UsageError(f"unknown policy {exc.args[0]!r}; choices: {sorted(BUILTIN_SCHEDULES)}")
        rows = sweep(horizons, gamma_set, schedules, RewardModel())
    except VideoloomError as exc:
        raise _fail(exc)
    click.echo(render_table(rows))
    if records_path:
        write_lines(Path(records_path), serialize_rows(rows))


@main.command()
@click.option("--input", "inputs", type=click.Path(), multiple=True, required=True, help="Detections file(s).")
@click.option("--nll", "nll_path", type=click.Path(), default=None, help="Optional NLL records file.")
@out_option
@seed_option
@config_option
@set_option
def run(inputs, nll_path, out_dir, seed, config_path, overrides) -> None:
    """Run the whole pipeline and write the run manifest."""
    try:
        config = load_config(config_path, overrides)
        manifest = run_pipeline(config, inputs, out_dir, seed, nll_path)
    except VideoloomError as exc:
        raise _fail(exc)
    counts = manifest["counts"]
    click.echo(
        f"clips={counts['clips']} trajectories={counts['trajectories']} kept={counts['kept']} "
        f"conversations={counts['conversations']}"
    )


if __name__ == "__main__":
    main()
