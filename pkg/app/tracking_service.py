import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from app.appearance import FeatureProvider, HogFeatureProvider, HogParams, NullFeatureProvider
from app.association import build_cost_matrix, classify, solve_assignment
from app.config import TrackerConfig
from app.exceptions import DataError
from app.lifecycle import (
    SlopeWindow,
    Track,
    create_track,
    penalty_age_update,
    prune,
    trend_velocity,
    trusted_neighbours,
    update_strong,
    update_weak,
)
from app.models import Detection, FrameInput, TrackOutput, TrackStatus
from app.particles import Rng, Stage, resample, sample_particles
from app.swarm import Neighbour, SwarmResult, neighbours, optimize

logger = logging.getLogger(__name__)


class ParticleSwarmTracker:
    """
    Rastreador multiobjeto: amostragem de partículas, PSO, associação húngara,
    atualização de estados, regressão de velocidade e remoção de trilhas.
    """

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = (config or TrackerConfig()).validated()
        self.window = SlopeWindow.from_config(self.config)
        self.hog_params = HogParams.from_config(self.config)
        self._rng = Rng(self.config.seed)
        self.reset()

    def reset(self):
        """Descarta todas as trilhas; ids recomeçam em 1"""
        self._tracks: List[Track] = []
        self._next_id = 1
        self.frame_index: Optional[int] = None

    @property
    def tracks(self) -> Tuple[Track, ...]:
        return tuple(self._tracks)

    def step(self, frame: FrameInput) -> List[TrackOutput]:
        """Processa um quadro e retorna as trilhas sobreviventes ordenadas por id"""
        self._check_frame(frame)
        cfg = self.config
        t = frame.frame_index
        dets = list(frame.detections)

        # Instantâneo de vizinhos com os estados do início do quadro
        for track in self._tracks:
            track.prev_state = track.state
        snapshot = {tr.id: neighbours(tr, self._tracks, cfg.radius_scale) for tr in self._tracks}

        provider: FeatureProvider = NullFeatureProvider()
        if frame.image is not None and not cfg.frameless:
            provider = HogFeatureProvider(frame.image, self.hog_params)

        swarms = self._run_swarms(t, provider, snapshot)

        # Associação
        cost = build_cost_matrix(self._tracks, dets, cfg)
        result = classify(solve_assignment(cost, cfg.gate), dets, cfg.conf_new)
        by_id: Dict[int, Track] = {tr.id: tr for tr in self._tracks}

        for track_id, j in result.strong:
            _remember_appearance(update_strong(by_id[track_id], dets[j], cfg), provider)
        for track_id in result.weak:
            by_id[track_id].status = TrackStatus.WEAK

        # Fracas depois das fortes: vizinhos fortes já estão atualizados
        for track_id in result.weak:
            track = by_id[track_id]
            swarm = swarms[track_id]
            has_strong = bool(trusted_neighbours(track, swarm, self._tracks, cfg))
            update_weak(track, swarm, self._tracks, cfg)
            penalty_age_update(
                track, swarm.gbest_history_fitness, has_strong, self._entrance_penalty(track), cfg
            )

        for j in result.births:
            self._tracks.append(_remember_appearance(create_track(dets[j], self._next_id, cfg), provider))
            self._next_id += 1

        for track in self._tracks:
            track.vel = trend_velocity(track.history, self.window)

        before = len(self._tracks)
        self._tracks = prune(self._tracks, cfg.age_max)
        if len(self._tracks) != before:
            logger.debug(f"Quadro {t}: {before - len(self._tracks)} trilhas removidas")

        self.frame_index = t
        return [
            TrackOutput(tr.id, tr.state, tr.status, tr.penalty, tr.age)
            for tr in sorted(self._tracks, key=lambda x: x.id)
        ]

    def _check_frame(self, frame: FrameInput):
        if self.frame_index is not None and frame.frame_index <= self.frame_index:
            raise DataError(
                f"Quadro {frame.frame_index} fora de ordem (último processado: {self.frame_index})"
            )
        for k, det in enumerate(frame.detections):
            if not (math.isfinite(det.conf) and 0.0 <= det.conf <= 1.0):
                raise DataError(
                    f"Detecção #{k} do quadro {frame.frame_index}: confiança {det.conf} fora de [0, 1]",
                    index=k,
                )
            if det.box.w <= 0 or det.box.h <= 0:
                raise DataError(
                    f"Detecção #{k} do quadro {frame.frame_index}: tamanho não positivo", index=k
                )

    def _run_swarms(
        self,
        t: int,
        provider: FeatureProvider,
        snapshot: Dict[int, List[Neighbour]],
    ) -> Dict[int, SwarmResult]:
        def run(track: Track) -> SwarmResult:
            sampled = sample_particles(track, self.config, self._rng.stream(t, track.id, Stage.SAMPLE))
            swarm = optimize(
                track, sampled, provider, snapshot[track.id], self.config,
                self._rng.stream(t, track.id, Stage.PSO),
            )
            swarm.particles = resample(
                swarm.particles, swarm.gbest, self.config, self._rng.stream(t, track.id, Stage.RESAMPLE)
            )
            return swarm

        if self.config.workers > 1 and len(self._tracks) > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                results = list(pool.map(run, self._tracks))
        else:
            results = [run(track) for track in self._tracks]

        swarms: Dict[int, SwarmResult] = {}
        for track, swarm in zip(self._tracks, results):
            track.particles = swarm.particles
            swarms[track.id] = swarm
        return swarms

    def _entrance_penalty(self, track: Track) -> float:
        for left, top, right, bottom in self.config.entrance_areas:
            if left <= track.state.u <= right and top <= track.state.v <= bottom:
                return self.config.entrance_penalty
        return 0.0


def _remember_appearance(track: Track, provider: FeatureProvider) -> Track:
    """Guarda o HoG do estado confirmado; sem imagem ou fora do quadro mantém o anterior"""
    features = provider.features(track.state)
    if features is not None:
        track.appearance = features
    return track


def run_sequence(
    tracker,
    frames: Sequence[FrameInput],
) -> Dict[int, List[TrackOutput]]:
    """Executa um rastreador sobre uma sequência de quadros"""
    outputs: Dict[int, List[TrackOutput]] = {}
    for frame in frames:
        outputs[frame.frame_index] = tracker.step(frame)
    logger.info(
        f"Sequência processada: {len(frames)} quadros, "
        f"{len({o.id for outs in outputs.values() for o in outs})} identidades"
    )
    return outputs


def detections_only(frames: Dict[int, List[Detection]], n_frames: Optional[int] = None) -> List[FrameInput]:
    """Quadros 1..N sem imagem a partir de listas de detecções (quadros ausentes ficam vazios)"""
    last = n_frames if n_frames is not None else max(frames, default=0)
    return [FrameInput(k, list(frames.get(k, []))) for k in range(1, last + 1)]
