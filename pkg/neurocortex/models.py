"""Data models for the neurocortex harness: scenarios, snapshots and traces."""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from neurocortex.config import CompetitionParams, NetParams

StepCommand = Literal[
    "name",
    "set",
    "neuron",
    "synapse",
    "word",
    "ground",
    "inject",
    "step",
    "train",
    "recall",
    "object",
    "learn",
    "generate",
    "rule",
    "rules",
    "infer",
    "consolidate",
    "transitive",
    "groups",
    "measure",
    "probe",
    "save",
    "assert",
]


class ScenarioStep(BaseModel):
    """One parsed scenario statement."""

    index: int = Field(..., description="Position among executable steps, from 0")
    line: int = Field(..., description="1-based line number in the source file")
    command: StepCommand
    args: List[str] = Field(default_factory=list)
    options: Dict[str, str] = Field(default_factory=dict)
    text: str = Field("", description="Statement text without comments")


class Scenario(BaseModel):
    name: str = "scenario"
    overrides: Dict[str, str] = Field(default_factory=dict, description="Dotted config overrides from set lines")
    steps: List[ScenarioStep] = Field(default_factory=list)


class TraceRow(BaseModel):
    tick: int
    fired: List[int] = Field(default_factory=list)
    probes: Dict[str, float] = Field(default_factory=dict)


class RunSummary(BaseModel):
    """Result of one scenario run, written as ``summary.json``."""

    scenario: str
    status: Literal["passed", "failed", "error"]
    exit_code: int
    seed: int
    steps_executed: int = 0
    ticks: int = 0
    outputs: List[str] = Field(default_factory=list)
    failure: Optional[str] = None
    trace_path: Optional[str] = None
    edge_hash: Optional[str] = None


# -- snapshot records ---------------------------------------------------------


class NeuronRecord(BaseModel):
    kind: Literal["excitatory", "inhibitory"] = "excitatory"
    rate: float = 0.0
    fired: bool = False
    label: Optional[str] = None
    clamped: bool = False


class SynapseRecord(BaseModel):
    pre: int
    post: int
    ltm: float
    stm: float
    delay: int
    sign: int
    buffer: List[float] = Field(default_factory=list, description="Delay line, oldest value first")


class InjectionRecord(BaseModel):
    neurons: List[int]
    strength: float
    start: int
    stop: int


class RngRecord(BaseModel):
    """Bit generator state; 128-bit integers are kept as decimal strings."""

    bit_generator: str
    state: str
    inc: str
    has_uint32: int = 0
    uinteger: int = 0


class GroupRecord(BaseModel):
    members: List[int]
    overlap_threshold: int = 1
    inhibition_strength: float = 5.0


class PatternRecord(BaseModel):
    slots: List[Tuple[Optional[str], Optional[int]]] = Field(
        default_factory=list, description="(fixed word, open slot id) per position"
    )
    pools: Dict[int, GroupRecord] = Field(default_factory=dict)
    gap: int = 2
    source: List[str] = Field(default_factory=list)


class RuleRecord(BaseModel):
    kind: Literal["IMP", "NOT", "FALSE"]
    args: List[str]
    synapses: List[int] = Field(default_factory=list)
    interneurons: List[int] = Field(default_factory=list)


class RegistryRecord(BaseModel):
    """Session registries stored alongside the network."""

    words: Dict[str, int] = Field(default_factory=dict)
    grounding: List[Tuple[int, int, float]] = Field(default_factory=list)
    patterns: Dict[str, PatternRecord] = Field(default_factory=dict)
    atoms: Dict[str, int] = Field(default_factory=dict)
    rules: List[RuleRecord] = Field(default_factory=list)
    bias: Optional[str] = None


class SnapshotFile(BaseModel):
    format_version: int
    params: NetParams
    tick: int
    neurons: List[NeuronRecord]
    synapses: List[SynapseRecord]
    schedule: List[InjectionRecord] = Field(default_factory=list)
    groups: List[GroupRecord] = Field(default_factory=list)
    competition: Optional[CompetitionParams] = None
    rng: RngRecord
    registries: RegistryRecord = Field(default_factory=RegistryRecord)
