"""
Run Configuration
Typed, validated view of the YAML run configuration
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from grnsynth.analytics.metrics import ForestConfig, MmdConfig
from grnsynth.analytics.preprocessing import DEFAULT_LIBRARY_SCALE, PreprocessConfig, SplitSpec
from grnsynth.grn.inference import GbmConfig
from grnsynth.knowledge.client import LlmConfig
from grnsynth.utils.config_loader import load_config
from grnsynth.utils.exceptions import ConfigError, GrnSynthError
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

HUMAN_FILE = 'human_file'
LLM = 'llm'
KB_SOURCES = (HUMAN_FILE, LLM)

GRN_SOURCES = ('llm', 'statistical', 'random', 'file', 'control', 'stage1')
SETTING_LABELS = {
    (HUMAN_FILE, 'llm'): '1A',
    (HUMAN_FILE, 'statistical'): '1B',
    (LLM, 'llm'): '2A',
    (LLM, 'statistical'): '2B',
}
# non-causal bootstrap baseline, not the adversarial controller
BASELINE_LABELS = {'stage1': 'stage1-surrogate'}


def build_section(cls, data, section):
    """Instantiate a config dataclass from a mapping, rejecting unknown keys"""
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid '{section}' section: {e}") from e


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    matrix: str
    format: Optional[str] = None
    labels: Optional[str] = None
    context: str = ''
    context_file: Optional[str] = None
    test_size: int = 1000
    val_size: int = 1000
    n_top_genes: int = 1000
    min_cells_expressed: Optional[int] = None
    library_scale: float = DEFAULT_LIBRARY_SCALE
    split_seed: int = 0

    def split(self):
        return SplitSpec(self.test_size, self.val_size, self.split_seed)

    def preprocess(self):
        return PreprocessConfig(self.n_top_genes, self.min_cells_expressed)

    def context_text(self):
        if self.context_file:
            return Path(self.context_file).read_text(encoding='utf-8').strip()
        return self.context


@dataclass(frozen=True)
class KnowledgeConfig:
    source: str = HUMAN_FILE
    tf_list: Optional[str] = None
    window: int = 20
    stride: int = 10
    validate_membership: bool = True
    max_tfs: Optional[int] = None
    max_retries: int = 3
    tf_template: Optional[str] = None
    regulator_template: Optional[str] = None


@dataclass(frozen=True)
class SynthesisConfig:
    """n_cells=None samples as many cells as the test split holds;
    control_cells=None compares the whole training split"""

    n_cells: Optional[int] = None
    control_cells: Optional[int] = None
    replicates: int = 4


@dataclass(frozen=True)
class MetricsConfig:
    space: str = 'lognorm'
    mmd: MmdConfig = field(default_factory=MmdConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    n_pcs: int = 50
    markers: tuple = ()
    plots: bool = True
    interactive: bool = False


@dataclass(frozen=True)
class ArmConfig:
    """One experimental arm; grn_file is only used by the 'file' source"""

    name: str
    grn_source: str
    grn_file: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration"""

    dataset: DatasetConfig
    knowledge: KnowledgeConfig
    llm: LlmConfig
    gbm: GbmConfig
    synthesis: SynthesisConfig
    metrics: MetricsConfig
    arms: tuple
    seeds: tuple = (0,)
    k: int = 10
    out_dir: str = 'output'
    n_jobs: int = 1
    parallel_arms: int = 1

    @classmethod
    def from_dict(cls, data, base_dir='.'):
        """
        Build a RunConfig from a configuration mapping

        Args:
            data: Mapping loaded from YAML
            base_dir: Directory relative paths are resolved against

        Returns:
            RunConfig: Validated configuration
        """
        data = dict(data or {})
        base_dir = Path(base_dir)

        def resolve(value):
            if value in (None, ''):
                return value
            path = Path(value)
            return str(path if path.is_absolute() else base_dir / path)

        sections = {'run', 'dataset', 'knowledge', 'llm', 'gbm', 'synthesis', 'metrics', 'arms', 'seeds'}
        unknown = sorted(set(data) - sections)
        if unknown:
            raise ConfigError(f"Unknown configuration sections: {unknown}")
        if 'dataset' not in data:
            raise ConfigError("Missing 'dataset' section")

        dataset = build_section(DatasetConfig, data['dataset'], 'dataset')
        dataset = replace(
            dataset,
            matrix=resolve(dataset.matrix),
            labels=resolve(dataset.labels),
            context_file=resolve(dataset.context_file),
        )
        knowledge = build_section(KnowledgeConfig, data.get('knowledge'), 'knowledge')
        knowledge = replace(
            knowledge,
            tf_list=resolve(knowledge.tf_list),
            tf_template=resolve(knowledge.tf_template),
            regulator_template=resolve(knowledge.regulator_template),
        )
        llm = build_section(LlmConfig, data.get('llm'), 'llm')
        llm = replace(llm, cache_path=resolve(llm.cache_path))
        gbm = build_section(GbmConfig, data.get('gbm'), 'gbm')
        synthesis = build_section(SynthesisConfig, data.get('synthesis'), 'synthesis')

        metrics_data = dict(data.get('metrics') or {})
        mmd_data = dict(metrics_data.pop('mmd', None) or {})
        if isinstance(mmd_data.get('bandwidths'), list):
            mmd_data['bandwidths'] = tuple(mmd_data['bandwidths'])
        metrics_data['mmd'] = build_section(MmdConfig, mmd_data, 'metrics.mmd')
        metrics_data['forest'] = build_section(ForestConfig, metrics_data.pop('forest', None), 'metrics.forest')
        metrics_data['markers'] = tuple(metrics_data.get('markers') or ())
        metrics = build_section(MetricsConfig, metrics_data, 'metrics')

        arms = []
        for i, arm_data in enumerate(data.get('arms') or []):
            arm = build_section(ArmConfig, arm_data, f'arms[{i}]')
            arms.append(replace(arm, grn_file=resolve(arm.grn_file)))

        seeds = data.get('seeds', [0])
        if isinstance(seeds, int):
            seeds = [seeds]

        run = dict(data.get('run') or {})
        run_known = {'k', 'out_dir', 'n_jobs', 'parallel_arms'}
        if set(run) - run_known:
            raise ConfigError(f"Unknown keys in 'run': {sorted(set(run) - run_known)}")
        config = cls(
            dataset=dataset,
            knowledge=knowledge,
            llm=llm,
            gbm=gbm,
            synthesis=synthesis,
            metrics=metrics,
            arms=tuple(arms),
            seeds=tuple(int(s) for s in seeds),
            k=int(run.get('k', 10)),
            out_dir=resolve(run.get('out_dir', 'output')),
            n_jobs=int(run.get('n_jobs', 1)),
            parallel_arms=int(run.get('parallel_arms', 1)),
        )
        config.validate()
        return config

    @classmethod
    def load(cls, config_path):
        """Load and validate a YAML run configuration"""
        data = load_config(config_path)
        return cls.from_dict(data, base_dir=Path(config_path).parent)

    def validate(self):
        """Raise ConfigError for any problem detectable before running"""
        problems = []

        if not Path(self.dataset.matrix).exists():
            problems.append(f"dataset matrix not found: {self.dataset.matrix}")
        for name in ('labels', 'context_file'):
            value = getattr(self.dataset, name)
            if value and not Path(value).exists():
                problems.append(f"dataset {name} not found: {value}")

        if self.knowledge.source not in KB_SOURCES:
            problems.append(f"knowledge.source must be one of {KB_SOURCES}")
        if self.knowledge.source == HUMAN_FILE:
            if not self.knowledge.tf_list:
                problems.append("knowledge.source=human_file requires knowledge.tf_list")
            elif not Path(self.knowledge.tf_list).exists():
                problems.append(f"TF list not found: {self.knowledge.tf_list}")
        for name in ('tf_template', 'regulator_template'):
            value = getattr(self.knowledge, name)
            if value and not Path(value).exists():
                problems.append(f"knowledge.{name} not found: {value}")

        if self.k < 1:
            problems.append(f"k must be >= 1, got {self.k}")
        if not self.seeds:
            problems.append("seeds must not be empty")
        if self.synthesis.replicates < 1:
            problems.append("synthesis.replicates must be >= 1")
        if self.synthesis.n_cells is not None and self.synthesis.n_cells < 1:
            problems.append("synthesis.n_cells must be >= 1")
        if self.synthesis.control_cells is not None and self.synthesis.control_cells < 1:
            problems.append("synthesis.control_cells must be >= 1")
        if self.metrics.space not in ('lognorm', 'raw'):
            problems.append(f"metrics.space must be lognorm or raw, got {self.metrics.space}")
        if self.parallel_arms < 1 or self.n_jobs < 1:
            problems.append("parallel_arms and n_jobs must be >= 1")

        if not self.arms:
            problems.append("at least one arm is required")
        names = [arm.name for arm in self.arms]
        if len(set(names)) != len(names):
            problems.append(f"arm names must be unique: {names}")
        for arm in self.arms:
            if arm.grn_source not in GRN_SOURCES:
                problems.append(f"arm {arm.name}: grn_source must be one of {GRN_SOURCES}")
            if arm.grn_source == 'file':
                if not arm.grn_file:
                    problems.append(f"arm {arm.name}: grn_source=file requires grn_file")
                elif not Path(arm.grn_file).exists():
                    problems.append(f"arm {arm.name}: GRN file not found: {arm.grn_file}")

        try:
            self.dataset.split()
            self.dataset.preprocess()
        except GrnSynthError as e:
            problems.append(str(e))

        if problems:
            for problem in problems:
                logger.error(f"Config error: {problem}")
            raise ConfigError("; ".join(problems))

    def setting_label(self, arm):
        """Setting label (1A/1B/2A/2B) of an arm, or its baseline label or source for other arms"""
        label = SETTING_LABELS.get((self.knowledge.source, arm.grn_source))
        return label or BASELINE_LABELS.get(arm.grn_source, arm.grn_source)

    def with_overrides(self, seed=None, out_dir=None, parallel_arms=None):
        """Copy with CLI overrides applied"""
        config = self
        if seed is not None:
            config = replace(config, seeds=(int(seed),))
        if out_dir is not None:
            config = replace(config, out_dir=str(out_dir))
        if parallel_arms is not None:
            config = replace(config, parallel_arms=int(parallel_arms))
        config.validate()
        return config

    def to_dict(self):
        """Plain snapshot for the manifest"""
        return asdict(self)
