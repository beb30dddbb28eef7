"""Neural process-control study of a steam-flow valve plant.

Thin Python layer over the C++ core: plant simulation, NARX / NARMA-L2
identification, the three neural controllers, closed-loop scenarios, and the
table-reproduction harness.
"""

try:  # installed layout: extension lives inside the package
    from . import _steamflow as _core
except ImportError:  # build-tree layout: extension on sys.path
    import _steamflow as _core

__all__ = [
    "ActuatorParams",
    "ControllerBundle",
    "ControllerFault",
    "ControllerKind",
    "Dataset",
    "DiscretePlant",
    "ExcitationConfig",
    "IdentifyOptions",
    "NarmaL2Model",
    "NarxModel",
    "NoiseConfig",
    "ReferenceKind",
    "ReferenceSignal",
    "RunRecord",
    "Scenario",
    "StepMetrics",
    "TrackMetrics",
    "TrainConfig",
    "TrainingError",
    "TransferFunction",
    "ValidationError",
    "build_transfer_function",
    "collect_dataset",
    "generate_excitation",
    "identify_narma_l2",
    "identify_narx",
    "load_bundle",
    "make_paper_plant",
    "reproduce_tables",
    "run_csv",
    "run_scenario",
    "run_svg",
    "save_bundle",
    "step_metrics",
    "track_metrics",
    "train_bundle",
]

for _name in __all__:
    globals()[_name] = getattr(_core, _name)
del _name, _core
