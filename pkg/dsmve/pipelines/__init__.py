from dsmve.pipelines.chaos import pipeline as chaos
from dsmve.pipelines.convergence import pipeline as convergence
from dsmve.pipelines.fbm import pipeline as fbm
from dsmve.pipelines.probe_maximal import pipeline as probe_maximal
from dsmve.pipelines.probe_moments import pipeline as probe_moments
from dsmve.pipelines.simulate import pipeline as simulate

pipelines = [
    fbm,
    simulate,
    convergence,
    chaos,
    probe_maximal,
    probe_moments,
]
