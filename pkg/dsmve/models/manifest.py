from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional


@dataclass
class RunManifest:
    """Inputs and outputs of one CLI run. Re-running a subcommand with the
    same config file, seed, and parameters reproduces the digested CSVs
    byte for byte (independent of the thread count).
    """

    tool: str
    version: str
    command: str
    seed: Optional[int]
    config_path: Optional[str] = None
    config_sha256: Optional[str] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    # output path -> sha256 hex digest
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_clock_seconds: Optional[float] = None

    @staticmethod
    def from_dict(d: Dict) -> "RunManifest":
        return RunManifest(**d)

    def to_dict(self: "RunManifest") -> Dict:
        return asdict(self)
