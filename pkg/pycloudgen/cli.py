"""Command-line entry point: dataset synthesis, both training stages, reconstruction,
generation, interpolation, evaluation and latent export."""

# Standard library imports
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

# Third party imports
import numpy as np
import pandas as pd
from tqdm import tqdm

# Local imports
from pycloudgen.autodiff import no_grad
from pycloudgen.data.cloud_io import load_cloud, save_cloud
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.data.latents import export_latents
from pycloudgen.data.manifest import ManifestEntry, load_manifest, save_manifest, split_manifest
from pycloudgen.data.normalization import NormalizationRecord, denormalize, normalize_unit_cube
from pycloudgen.data.sampling import sample_points
from pycloudgen.data.synthetic import FAMILIES, get_family, synth_shape
from pycloudgen.networks import Decoder, Discriminator, Encoder, Mapper, NetworkConfig
from pycloudgen.networks.generator import generate, interpolate_latent, sample_prior
from pycloudgen.training.autoencoder import ae_adam_state, evaluate_reconstruction, train_ae_epoch
from pycloudgen.training.checkpoint import Checkpoint, build_checkpoint, load_checkpoint, save_checkpoint
from pycloudgen.training.configs import StageOneConfig, StageTwoConfig
from pycloudgen.training.gan import GanOptimizers, RealBatchStream, train_gan_epoch
from pycloudgen.utils.config import PROFILES, RunConfig
from pycloudgen.utils.distances import AuctionConfig, chamfer, emd_auction
from pycloudgen.utils.exceptions import FrozenDecoderError, ManifestError, NonFiniteLossError, PyCloudGenError
from pycloudgen.utils.generation_metrics import CloudSet, evaluate_generation
from pycloudgen.utils.logger import setup_logging

logger = logging.getLogger(__name__)

CLOUD_SUFFIXES = {".xyz": "text", ".pcd1": "binary"}
DEFAULT_ALPHAS = [round(-0.4 + 0.2 * step, 1) for step in range(10)]


def parse_alphas(text: str) -> list[float]:
    """Parses a comma-separated list of interpolation weights."""
    try:
        alphas = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"alphas must be comma-separated numbers (gave '{text}')") from error
    if not alphas:
        raise argparse.ArgumentTypeError("alphas must name at least one value")
    return alphas


def parse_families(text: str) -> list[str]:
    families = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [family for family in families if family not in FAMILIES]
    if unknown or not families:
        raise argparse.ArgumentTypeError(f"families must be among {list(FAMILIES)} (gave '{text}')")
    return families


def _resolve_config(args: argparse.Namespace) -> tuple[RunConfig, int]:
    config = RunConfig.from_sources(args.profile, args.config, args.set or [])
    seed = config.resolve_seed(args.seed)
    config = config.with_values(seed=seed)
    config.log()
    logger.info(f"seed = {seed}")
    return config, seed


def _append_log_row(path: Optional[Path], row: dict) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame([row]).to_csv(path, mode="a", header=not path.exists(), index=False)


def _log_path(args: argparse.Namespace) -> Path:
    return Path(args.log) if args.log else Path(args.out).with_suffix(".csv")


def _epoch_rng(seed: int, stage: int, epoch: int) -> np.random.Generator:
    # one stream per (seed, stage, epoch) so resumed runs replay the same draws
    return np.random.default_rng([seed, stage, epoch])


def _autoencoder(config: RunConfig, seed: int) -> tuple[Encoder, Decoder]:
    net_config = NetworkConfig.from_run_config(config)
    rng = np.random.default_rng([seed, 0])
    return Encoder(net_config, rng), Decoder(net_config, rng)


def _load_autoencoder(path: str) -> tuple[Checkpoint, Encoder, Decoder]:
    checkpoint = load_checkpoint(path, "ae")
    encoder, decoder = _autoencoder(checkpoint.config, checkpoint.seed)
    checkpoint.load_into(encoder)
    checkpoint.load_into(decoder)
    return checkpoint, encoder.eval(), decoder.eval()


def _cloud_files(directory: Path) -> list[Path]:
    files = sorted(path for path in directory.iterdir() if path.suffix in CLOUD_SUFFIXES)
    if not files:
        raise ManifestError(f"no cloud files ({', '.join(CLOUD_SUFFIXES)}) in {directory}")
    return files


def _load_set(source: Path, split: str, num_points: int, seed: int) -> list[np.ndarray]:
    """Clouds of a manifest split (all entries when the split is empty) or of a directory,
    each resampled to num_points."""
    if source.is_dir():
        paths = _cloud_files(source)
    else:
        manifest = load_manifest(source)
        entries = manifest.split(split) or manifest.entries
        paths = [manifest.resolve(entry) for entry in entries]
    return [sample_points(load_cloud(path), num_points, seed + index) for index, path in enumerate(paths)]


def cmd_make_synthetic(args: argparse.Namespace) -> None:
    _, seed = _resolve_config(args)
    out = Path(args.out)
    rng = np.random.default_rng(seed)
    suffix = ".pcd1" if args.binary else ".xyz"

    entries = []
    for family in args.families:
        shape_family = get_family(family)
        for index in range(args.count_per_family):
            params = shape_family.random_params(rng)
            cloud = synth_shape(family, params, args.points, int(rng.integers(2**31)), args.jitter)
            relative = Path(family) / f"{family}_{index:04d}{suffix}"
            save_cloud(out / relative, cloud)
            entries.append(ManifestEntry(relative.as_posix(), family))

    manifest = split_manifest(entries, seed)
    save_manifest(out / "manifest.tsv", manifest)
    logger.info(f"wrote {len(entries)} clouds: {len(manifest.split('train'))} train, {len(manifest.split('test'))} test")


def cmd_train_ae(args: argparse.Namespace) -> None:
    config, seed = _resolve_config(args)
    cfg = StageOneConfig.from_run_config(config)
    manifest = load_manifest(args.data)
    num_points = config.get_int("num_points")
    train_set = CloudDataset.from_manifest(manifest, "train", num_points, seed)

    encoder, decoder = _autoencoder(config, seed)
    state = ae_adam_state(cfg)
    start_epoch = 0
    if args.resume:
        resumed = load_checkpoint(args.resume, "ae")
        resumed.load_into(encoder)
        resumed.load_into(decoder)
        if "ae" in resumed.optimizers:
            resumed.optimizers["ae"].restore(state)
        start_epoch = resumed.epoch
        logger.info(f"resuming stage one at epoch {start_epoch}")
    logger.info(f"encoder parameters: {encoder.parameter_count()}, decoder parameters: {decoder.parameter_count()}")

    log_path = _log_path(args)
    for epoch in tqdm(range(start_epoch, cfg.epochs), desc="stage one", disable=not args.progress):
        try:
            stats = train_ae_epoch(encoder, decoder, train_set, cfg, state, epoch, _epoch_rng(seed, 1, epoch))
        except NonFiniteLossError:
            logger.error(f"stage one aborted at epoch {epoch}; the last good checkpoint in {args.out} is kept")
            raise
        _append_log_row(log_path, stats.as_row())
        if (epoch + 1) % args.save_every == 0 or epoch + 1 == cfg.epochs:
            save_checkpoint(args.out, build_checkpoint("ae", [encoder, decoder], {"ae": state}, config, epoch + 1, seed))

    if manifest.split("test"):
        test_set = CloudDataset.from_manifest(manifest, "test", num_points, seed)
        report = evaluate_reconstruction(encoder, decoder, test_set, cfg.auction)
        logger.info(f"test split: CD x1e4 = {report.cd_reported:.4f}, EMD x1e2 = {report.emd_reported:.4f}")


def cmd_train_gan(args: argparse.Namespace) -> None:
    config, seed = _resolve_config(args)
    cfg = StageTwoConfig.from_run_config(config)
    pretrained = load_checkpoint(args.ae_checkpoint, "ae")
    # the architecture is the one the decoder was trained with
    net_config = NetworkConfig.from_run_config(pretrained.config)
    config = config.with_values(**{key: pretrained.config.get_str(key) for key in net_config.as_dict() if key in pretrained.config})

    manifest = load_manifest(args.data)
    train_set = CloudDataset.from_manifest(manifest, "train", net_config.num_points, seed)

    rng = np.random.default_rng([seed, 2])
    decoder = Decoder(net_config, rng)
    if cfg.pretrained_decoder:
        pretrained.load_into(decoder)
    mapper = Mapper(net_config, rng)
    disc = Discriminator(net_config, rng)
    optimizers = GanOptimizers.from_config(cfg)

    start_epoch = 0
    if args.resume:
        resumed = load_checkpoint(args.resume, "gan")
        for network in (decoder, mapper, disc):
            resumed.load_into(network)
        resumed.optimizers["critic"].restore(optimizers.critic)
        resumed.optimizers["generator"].restore(optimizers.generator)
        start_epoch = resumed.epoch
        logger.info(f"resuming stage two at epoch {start_epoch}")
    logger.info(f"mapper parameters: {mapper.parameter_count()}, discriminator parameters: {disc.parameter_count()}")

    decoder_before = decoder.state_dict()
    log_path = _log_path(args)
    for epoch in tqdm(range(start_epoch, cfg.epochs), desc="stage two", disable=not args.progress):
        rng = _epoch_rng(seed, 2, epoch)
        stream = RealBatchStream(train_set, cfg.batch, rng)
        stats = train_gan_epoch(mapper, decoder, disc, train_set, cfg, optimizers, epoch, rng, stream)
        _append_log_row(log_path, stats.as_row())
        if (epoch + 1) % args.save_every == 0 or epoch + 1 == cfg.epochs:
            labelled = {"critic": optimizers.critic, "generator": optimizers.generator}
            save_checkpoint(args.out, build_checkpoint("gan", [decoder, mapper, disc], labelled, config, epoch + 1, seed))

    if not cfg.decoder_trainable:
        after = decoder.state_dict()
        changed = [name for name, value in decoder_before.items() if value.tobytes() != after[name].tobytes()]
        if changed:
            raise FrozenDecoderError(f"decoder tensors changed during stage two: {changed}")


def cmd_reconstruct(args: argparse.Namespace) -> None:
    _, seed = _resolve_config(args)
    checkpoint, encoder, decoder = _load_autoencoder(args.checkpoint)
    original = load_cloud(args.input)
    cloud = sample_points(original, args.sample_n, seed) if args.sample_n else original
    normalized, record = normalize_unit_cube(cloud)

    with no_grad():
        output = decoder(encoder(normalized)).data[0]
    restored = denormalize(output, record)
    save_cloud(args.out, restored)
    logger.info(f"reconstructed {len(cloud)} input points into {len(restored)} points at {args.out}")

    if args.report:
        reference = original if len(original) == len(restored) else sample_points(original, len(restored), seed)
        cd = chamfer(restored, reference)
        emd, _ = emd_auction(restored, reference, AuctionConfig(eps_scale_factor=checkpoint.config.get_float("auction_eps_scale_factor")))
        print(f"cd = {cd!r}\nemd = {emd!r}")


def cmd_generate(args: argparse.Namespace) -> None:
    _, seed = _resolve_config(args)
    checkpoint = load_checkpoint(args.checkpoint, "gan")
    net_config = NetworkConfig.from_run_config(checkpoint.config)
    decoder = checkpoint.load_into(Decoder(net_config))
    mapper = checkpoint.load_into(Mapper(net_config)) if checkpoint.config.get_bool("use_mapper") else None

    w = sample_prior(args.count, net_config.latent_dim, np.random.default_rng(seed))
    clouds = generate(w, mapper, decoder)
    suffix = ".pcd1" if args.binary else ".xyz"
    for index, cloud in enumerate(clouds):
        save_cloud(Path(args.out) / f"gen_{index:04d}{suffix}", cloud)
    logger.info(f"wrote {len(clouds)} generated clouds to {args.out}")


def _blend_records(source: NormalizationRecord, target: NormalizationRecord, alpha: float) -> NormalizationRecord:
    # geometric blend keeps the scale positive under extrapolation
    center = (1.0 - alpha) * source.center + alpha * target.center
    return NormalizationRecord(center=center, scale=float(source.scale ** (1.0 - alpha) * target.scale**alpha))


def cmd_interpolate(args: argparse.Namespace) -> None:
    _resolve_config(args)
    _, encoder, decoder = _load_autoencoder(args.checkpoint)
    source, source_record = normalize_unit_cube(load_cloud(args.source))
    target, target_record = normalize_unit_cube(load_cloud(args.target))

    with no_grad():
        z_source = encoder(source).data
        z_target = encoder(target).data
        for alpha, z in zip(args.alphas, interpolate_latent(z_source, z_target, args.alphas)):
            cloud = decoder(z).data[0]
            record = _blend_records(source_record, target_record, alpha)
            save_cloud(Path(args.out) / f"interp_{alpha:+.2f}.xyz", denormalize(cloud, record))
    logger.info(f"wrote {len(args.alphas)} interpolated clouds to {args.out}")


def cmd_evaluate(args: argparse.Namespace) -> None:
    config, seed = _resolve_config(args)
    num_points = args.points or config.get_int("num_points")
    reference = _load_set(Path(args.ref), args.split, num_points, seed)
    generated = [sample_points(load_cloud(path), num_points, seed + index) for index, path in enumerate(_cloud_files(Path(args.gen)))]

    if len(generated) != len(reference):
        logger.warning(f"generated set has {len(generated)} clouds, reference has {len(reference)}; resampling the generated set to match")
        rng = np.random.default_rng(seed)
        replace = len(generated) < len(reference)
        picks = rng.choice(len(generated), size=len(reference), replace=replace)
        generated = [generated[i] for i in picks]

    report = evaluate_generation(
        CloudSet(reference, "reference"),
        CloudSet(generated, "generated"),
        grid_res=config.get_int("jsd_grid_res"),
        cfg=AuctionConfig(eps_scale_factor=config.get_float("auction_eps_scale_factor")),
        workers=config.get_int("workers"),
        progress=args.progress,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_lines(), encoding="utf-8")
    out.with_suffix(".json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.to_lines(), end="")


def cmd_export_latents(args: argparse.Namespace) -> None:
    _, seed = _resolve_config(args)
    checkpoint, encoder, _ = _load_autoencoder(args.checkpoint)
    manifest = load_manifest(args.data)
    split = None if args.split == "all" else args.split
    dataset = CloudDataset.from_manifest(manifest, split, checkpoint.config.get_int("num_points"), seed)
    export_latents(encoder, dataset, args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="flat 'key = value' config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")
    common.add_argument("--profile", choices=PROFILES, default=None, help="default profile (desk unless configured)")
    common.add_argument("--seed", type=int, default=None, help="run seed; overrides config and STARNET_SEED")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--log-file", default=None)
    common.add_argument("--progress", action="store_true", help="show progress bars")

    parser = argparse.ArgumentParser(prog="pycloudgen", description="Two-stage point-cloud auto-encoder and generator.")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable[[argparse.Namespace], None], help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    sub = command("make-synthetic", cmd_make_synthetic, "write a synthetic dataset and its manifest")
    sub.add_argument("--out", required=True)
    sub.add_argument("--families", type=parse_families, default=list(FAMILIES))
    sub.add_argument("--count-per-family", type=int, default=20)
    sub.add_argument("--points", type=int, default=2048)
    sub.add_argument("--jitter", type=float, default=0.0)
    sub.add_argument("--binary", action="store_true", help="write .pcd1 files instead of .xyz")

    sub = command("train-ae", cmd_train_ae, "stage one: train the auto-encoder")
    sub.add_argument("--data", required=True, help="manifest")
    sub.add_argument("--out", required=True, help="checkpoint to write")
    sub.add_argument("--resume", default=None, help="stage-one checkpoint to continue from")
    sub.add_argument("--log", default=None, help="per-epoch CSV (default: next to --out)")
    sub.add_argument("--save-every", type=int, default=1)

    sub = command("train-gan", cmd_train_gan, "stage two: train mapper and discriminator")
    sub.add_argument("--data", required=True, help="manifest")
    sub.add_argument("--ae-checkpoint", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--resume", default=None, help="stage-two checkpoint to continue from")
    sub.add_argument("--log", default=None)
    sub.add_argument("--save-every", type=int, default=1)

    sub = command("reconstruct", cmd_reconstruct, "encode and decode one cloud")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--in", dest="input", required=True)
    sub.add_argument("--sample-n", type=int, default=None, help="down-sample the input first")
    sub.add_argument("--out", required=True)
    sub.add_argument("--report", action="store_true", help="print CD and EMD to the input")

    sub = command("generate", cmd_generate, "sample clouds from a trained generator")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--count", type=int, required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--binary", action="store_true")

    sub = command("interpolate", cmd_interpolate, "decode points on the latent line through two clouds")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--source", required=True)
    sub.add_argument("--target", required=True)
    sub.add_argument("--alphas", type=parse_alphas, default=DEFAULT_ALPHAS)
    sub.add_argument("--out", required=True)

    sub = command("evaluate", cmd_evaluate, "generation metrics of a generated set against a reference")
    sub.add_argument("--ref", required=True, help="manifest or directory of clouds")
    sub.add_argument("--gen", required=True, help="directory of generated clouds")
    sub.add_argument("--out", required=True, help="report file; a .json twin is written next to it")
    sub.add_argument("--split", choices=["train", "test"], default="test")
    sub.add_argument("--points", type=int, default=None, help="points per cloud (default: config num_points)")

    sub = command("export-latents", cmd_export_latents, "write the latent code of every cloud")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--data", required=True, help="manifest")
    sub.add_argument("--split", choices=["train", "test", "all"], default="all")
    sub.add_argument("--out", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("pycloudgen", args.log_level, args.log_file)
    try:
        args.handler(args)
    except (PyCloudGenError, OSError, ValueError) as error:
        message = " ".join(str(error).split())
        print(f"error: {message}", file=sys.stderr)
        return 1
    return 0
