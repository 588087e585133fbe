"""
Linha de comando: track, eval, synth, overlay, bench e serve.

Códigos de saída: 0 sucesso, 1 erro de uso, 2 erro de dados ou configuração.
Todas as mensagens de diagnóstico vão para stderr.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import uvicorn

from app.baseline import IouGreedyTracker
from app.benchmark import identity_suite, run_suite, suite_table
from app.config import TrackerConfig, settings
from app.exceptions import ConfigError, DataError
from app.io_formats import frame_path, parse_config, parse_det_file, read_pgm, read_track_file, write_result_file
from app.metrics import evaluate
from app.overlay import overlay_sequence
from app.scenario import generate_scenario, parse_scenario_spec, write_scenario
from app.tracking_service import ParticleSwarmTracker, detections_only, run_sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ArgumentParser(argparse.ArgumentParser):
    """argparse com código de saída 1 para erros de uso"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: erro: {message}\n")


def _iou_threshold(value: str) -> float:
    try:
        iou = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"número inválido: {value!r}")
    if not 0.0 < iou < 1.0:
        raise argparse.ArgumentTypeError(f"deve estar em (0, 1): {value}")
    return iou


def _non_negative_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"inteiro inválido: {value!r}")
    if n < 0:
        raise argparse.ArgumentTypeError(f"deve ser >= 0: {value}")
    return n


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="pso-tracker", description="Rastreamento multiobjeto com filtro de partículas guiado por PSO")
    parser.add_argument(
        "--log-level",
        default=settings.LOG_LEVEL,
        type=str.upper,
        choices=LOG_LEVELS,
        help="Nível de log (padrão: LOG_LEVEL)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    track = sub.add_parser("track", help="Rastreia um arquivo de detecções")
    track.add_argument("--det", required=True, help="Arquivo de detecções MOTChallenge")
    track.add_argument("--frames", help="Diretório com quadros %%06d.pgm (opcional)")
    track.add_argument("--config", help="Configuração chave = valor (opcional)")
    track.add_argument("--out", required=True, help="Arquivo de resultados")
    track.add_argument("--seed", type=_non_negative_int, help="Sobrescreve a semente da configuração")
    track.add_argument(
        "--include-weak",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Inclui trilhas fracas no resultado (padrão: sim)",
    )
    track.add_argument("--frameless", action="store_true", help="Ignora os quadros e o termo de aparência")
    track.add_argument("--workers", type=int, help="Sobrescreve o número de threads por alvo")
    track.add_argument("--baseline", action="store_true", help="Usa o rastreador de referência por IoU")

    ev = sub.add_parser("eval", help="Calcula MOTA, IDF1 e IDSW")
    ev.add_argument("--gt", required=True)
    ev.add_argument("--hyp", required=True)
    ev.add_argument("--iou", type=_iou_threshold, default=0.5)

    synth = sub.add_parser("synth", help="Gera um cenário sintético")
    synth.add_argument("--spec", required=True, help="Especificação do cenário (chave = valor)")
    synth.add_argument("--out-dir", required=True)

    overlay = sub.add_parser("overlay", help="Desenha trilhas sobre os quadros")
    overlay.add_argument("--frames", required=True)
    overlay.add_argument(
        "--tracks",
        required=True,
        help="Arquivo de resultados; conf < 1 (penalidade > 0) é tracejado. "
        "Trilhas fracas ainda sem penalidade aparecem sólidas",
    )
    overlay.add_argument("--out-dir", required=True)

    bench = sub.add_parser("bench", help="Suíte de preservação de identidades")
    bench.add_argument("--scenarios", type=_non_negative_int, default=20)
    bench.add_argument("--seed", type=_non_negative_int, default=0)
    bench.add_argument("--config", help="Configuração chave = valor (opcional)")

    serve = sub.add_parser("serve", help="Inicia a API HTTP")
    serve.add_argument("--host", default=settings.API_HOST)
    serve.add_argument("--port", type=int, default=settings.API_PORT)
    return parser


def _load_config(path: Optional[str]) -> TrackerConfig:
    return parse_config(path) if path else TrackerConfig()


def cmd_track(args) -> int:
    cfg = _load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.frameless:
        overrides["frameless"] = True
    if overrides:
        cfg = cfg.model_copy(update=overrides).validated()

    detections = parse_det_file(args.det)
    n_frames = max(detections, default=0)
    frames_dir = Path(args.frames) if args.frames and not cfg.frameless else None
    if frames_dir is not None:
        if not frames_dir.is_dir():
            raise DataError("diretório de quadros não encontrado", str(frames_dir))
        indices = [int(p.stem) for p in frames_dir.glob("*.pgm") if p.stem.isdigit()]
        n_frames = max([n_frames] + indices)

    frames = detections_only(detections, n_frames)
    if frames_dir is not None:
        missing = 0
        for frame in frames:
            path = frame_path(frames_dir, frame.frame_index)
            if path.exists():
                frame.image = read_pgm(path)
            else:
                missing += 1
        if missing:
            logger.warning(f"{missing} quadros sem imagem; aparência desativada nesses quadros")

    tracker = IouGreedyTracker(conf_new=cfg.conf_new) if args.baseline else ParticleSwarmTracker(cfg)
    outputs = run_sequence(tracker, frames)
    write_result_file(outputs, args.out, include_weak=args.include_weak)
    logger.info(f"Resultados gravados em {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate(read_track_file(args.gt), read_track_file(args.hyp), args.iou)
    print(report.table())
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = parse_scenario_spec(args.spec)
    paths = write_scenario(generate_scenario(spec), args.out_dir)
    logger.info(f"Cenário gravado: {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_overlay(args) -> int:
    if not Path(args.frames).is_dir():
        raise DataError("diretório de quadros não encontrado", args.frames)
    overlay_sequence(args.frames, read_track_file(args.tracks), args.out_dir)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    suite = identity_suite(args.scenarios, args.seed)
    tracked = run_suite(suite, lambda: ParticleSwarmTracker(cfg))
    reference = run_suite(suite, lambda: IouGreedyTracker(conf_new=cfg.conf_new))
    print(suite_table("PSO", tracked))
    print()
    print(suite_table("IoU guloso", reference))
    return EXIT_OK


def cmd_serve(args) -> int:
    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "track": cmd_track,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "overlay": cmd_overlay,
    "bench": cmd_bench,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help sai com 0; erros de uso já foram impressos
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=str(args.log_level).upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DataError) as e:
        logger.error(str(e))
        return EXIT_DATA
    except OSError as e:
        logger.error(f"Erro de arquivo: {str(e)}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
