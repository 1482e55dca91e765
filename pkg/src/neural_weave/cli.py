"""
Command-line interface.

    neural-weave gen-pattern  --pattern 2 --out maps.wwgm [--png preview]
    neural-weave gen-dataset  --out data/
    neural-weave train        data/*.wwds --weights weights.wwnn
    neural-weave encode       --scene scenes/single_cloth.json --out latents.json
    neural-weave render       --scene scenes/single_cloth.json --mode neural --out renders/frame
    neural-weave compare      a.npy b.npy --heat-map diff.png
    neural-weave edit         --scene scenes/single_cloth.json --edits edits.json --out renders/edited
    neural-weave validate-config config.json
    neural-weave config-template --out config.json

Global options select the config file, the .env file and ``--set
section.field=value`` overrides. Exit code 1 reports a domain error, 2 an
unexpected failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .__version__ import __version__
from .config import get_config_loader, reload_config
from .container import Container
from .domain.enums import RenderMode
from .domain.exceptions import NeuralWeaveError
from .domain.models import DEFAULT_GAP
from .services.editing_service import LatentEntry
from .utils.logging import CorrelationContext, configure_logging, get_logger

logger = get_logger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='neural-weave',
        description="Neural multi-scale woven fabric BSDF",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--config', help='JSON or YAML config file')
    parser.add_argument('--env-file', help='.env file with NEURAL_WEAVE_* variables')
    parser.add_argument('--set', action='append', default=[], metavar='SECTION.FIELD=VALUE',
                        help='Override a config value (repeatable)')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    parser.add_argument('--log-format', choices=['simple', 'structured'], help='Override the configured log format')
    parser.add_argument('--progress', action='store_true', help='Show progress bars')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen-pattern', help='Synthesize geometry maps for one material')
    p.add_argument('--pattern', type=int, default=0, help='Pattern index 0..6')
    p.add_argument('--twist', type=float, default=0.0)
    p.add_argument('--inclination', type=float, default=30.0)
    p.add_argument('--height-scale', type=float, default=1.0)
    p.add_argument('--gap', type=float, default=DEFAULT_GAP)
    p.add_argument('--resolution', type=int, help='Texels per repeat (rounded up to the weave size)')
    p.add_argument('--out', required=True, help='Output .wwgm file')
    p.add_argument('--png', help='Prefix for PNG previews of every channel')

    p = sub.add_parser('gen-dataset', help='Generate per-material training datasets')
    p.add_argument('--out', help='Output directory (default from config)')
    p.add_argument('--materials-per-pattern', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--no-resume', action='store_true', help='Recompute chunks that already have shards')

    p = sub.add_parser('train', help='Train the network')
    p.add_argument('datasets', nargs='+', help='Dataset files')
    p.add_argument('--weights', help='Output weight file')
    p.add_argument('--checkpoints', help='Checkpoint directory')
    p.add_argument('--metrics', help='Metrics CSV path')

    p = sub.add_parser('encode', help='Encode scene materials to latents')
    p.add_argument('--scene', required=True)
    p.add_argument('--out', default='latents.json')

    p = sub.add_parser('render', help='Render a scene')
    p.add_argument('--scene', required=True)
    p.add_argument('--mode', choices=[m.value for m in RenderMode], default=RenderMode.NEURAL.value)
    p.add_argument('--spp', type=int, help='Oracle samples per pixel in reference mode')
    p.add_argument('--latents', help='Latent cache written by encode')
    p.add_argument('--width', type=int)
    p.add_argument('--height', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--out', required=True, help='Output stem; writes .npy and .png')

    p = sub.add_parser('compare', help='MSE and error heat map of two linear images')
    p.add_argument('a')
    p.add_argument('b')
    p.add_argument('--heat-map', help='PNG path for the error heat map')

    p = sub.add_parser('edit', help='Apply parameter changes and re-render')
    p.add_argument('--scene', required=True)
    p.add_argument('--edits', required=True, help='JSON {material_id: {field: value}}')
    p.add_argument('--latents', help='Latent cache to start from; rewritten after the edit')
    p.add_argument('--out', required=True, help='Output stem for the re-render')

    p = sub.add_parser('validate-config', help='Check a JSON or YAML config file')
    p.add_argument('file')

    p = sub.add_parser('config-template', help='Write the default configuration as JSON')
    p.add_argument('--out', help='Output file (default: stdout)')
    return parser


def _seed_cache(container: Container, scene, latents_path: Optional[str]) -> None:
    """Load cached latents whose material parameters still match the scene."""
    if not latents_path or not Path(latents_path).exists():
        return
    cache = container.editing_service.cache
    for material_id, (latent, spec) in container.latent_repository.load(latents_path).items():
        material = scene.materials.get(material_id)
        if material is not None and material.spec == spec:
            cache.put(material_id, LatentEntry(latent, material))


def _save_latents(container: Container, path: str) -> None:
    cache = container.editing_service.cache
    entries = {mid: (cache.get(mid).latent, cache.get(mid).material.spec) for mid in cache.ids()}
    container.latent_repository.save(entries, path)


def cmd_gen_pattern(container: Container, args) -> int:
    from .business.geometry import resolve_resolution, synthesize_geometry_maps
    from .business.weave import build_weave_matrix, catalog_pattern

    weave = build_weave_matrix(catalog_pattern(args.pattern))
    resolution = resolve_resolution(weave, args.resolution or container.config.pattern_settings.resolution)
    maps = synthesize_geometry_maps(weave, args.twist, args.inclination, args.gap, args.height_scale, resolution)
    container.geometry_repository.save(maps, args.out)
    if args.png:
        for channel in ('normal', 'orientation', 'height', 'yarn'):
            container.geometry_repository.export_png(maps, f"{args.png}_{channel}.png", channel)
    print(f"Wrote {args.out} ({resolution}x{resolution} texels, gap fraction {maps.gap_fraction:.3f})")
    return 0


def cmd_gen_dataset(container: Container, args) -> int:
    service = container.dataset_service
    materials = service.sample_materials(args.seed, args.materials_per_pattern)
    results = service.build(materials, Path(args.out) if args.out else None, args.seed, resume=not args.no_resume)
    for result in results:
        print(f"{result.path}: {result.records} records, {result.dropped} degenerate dropped")
    return 0


def cmd_train(container: Container, args) -> int:
    run = container.training_service.train(
        [Path(p) for p in args.datasets],
        Path(args.weights) if args.weights else None,
        Path(args.checkpoints) if args.checkpoints else None,
        Path(args.metrics) if args.metrics else None,
    )
    print(
        f"Trained {run.result.iterations} iterations: loss {run.result.initial_loss:.4g} -> "
        f"{run.result.final_loss:.4g}; weights at {run.weights_path}"
    )
    return 0


def cmd_encode(container: Container, args) -> int:
    scene = container.scene_repository.load(args.scene)
    container.editing_service.encode_scene(scene)
    _save_latents(container, args.out)
    print(f"Encoded {len(scene.material_ids())} materials to {args.out}")
    return 0


def cmd_render(container: Container, args) -> int:
    scene = container.scene_repository.load(args.scene)
    mode = RenderMode(args.mode)
    camera = scene.camera
    resolution = None
    if args.width or args.height:
        resolution = (args.width or camera.width, args.height or camera.height)
    if mode == RenderMode.NEURAL:
        _seed_cache(container, scene, args.latents)
        service = container.render_service
    else:
        service = container.reference_render_service
    image = service.render(scene, mode, args.spp, args.seed, resolution)
    png = service.save(image, Path(args.out))
    print(f"Rendered {png}")
    return 0


def cmd_compare(container: Container, args) -> int:
    service = container.reference_render_service
    result = service.compare_files(Path(args.a), Path(args.b), Path(args.heat_map) if args.heat_map else None)
    print(f"MSE {result.mse:.6g}")
    return 0


def cmd_edit(container: Container, args) -> int:
    scene = container.scene_repository.load(args.scene)
    edits = json.loads(Path(args.edits).read_text())
    _seed_cache(container, scene, args.latents)
    editing = container.editing_service
    edited, results = editing.apply_edits(scene, edits)
    for result in results:
        print(f"{result.material_id}: {result.path.value} ({', '.join(result.changed_fields) or 'no change'})")
    if args.latents:
        _save_latents(container, args.latents)
    service = container.render_service
    png = service.save(service.render(edited, RenderMode.NEURAL), Path(args.out))
    print(f"Rendered {png}")
    return 0


def cmd_validate_config(container: Container, args) -> int:
    errors = get_config_loader().validate_config_file(args.file)
    if errors:
        for error in errors:
            print(f"invalid: {error}")
        return 1
    print(f"{args.file} is valid")
    return 0


def cmd_config_template(container: Container, args) -> int:
    text = json.dumps(get_config_loader().get_config_template(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"Wrote {args.out}")
    else:
        print(text)
    return 0


COMMANDS = {
    'gen-pattern': cmd_gen_pattern,
    'gen-dataset': cmd_gen_dataset,
    'train': cmd_train,
    'encode': cmd_encode,
    'render': cmd_render,
    'compare': cmd_compare,
    'edit': cmd_edit,
    'validate-config': cmd_validate_config,
    'config-template': cmd_config_template,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = reload_config(config_file=args.config, env_file=args.env_file, overrides=args.set, validate_runtime=False)
        logging_settings = config.logging_settings
        configure_logging(
            log_level="DEBUG" if args.debug else logging_settings.level,
            log_file=logging_settings.log_file,
            enable_console=logging_settings.enable_console,
            structured_format=(args.log_format or logging_settings.format_type) == 'structured',
        )
        container = Container(config=config, show_progress=args.progress)
        with CorrelationContext(command=args.command):
            return COMMANDS[args.command](container, args)
    except NeuralWeaveError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 0
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return 2


if __name__ == '__main__':
    sys.exit(main())
