import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

from ..core.channel_model import (
    ChannelModel,
    PolicyKind,
    RoundsPolicy,
    ScenarioConfig,
    build_channel_matrix,
    db_to_linear,
)
from ..core.monte_carlo import McConfig, SymbolModel
from ..errors import ConfigError

KNOWN_SECTIONS = {
    'scenario': {'n_nodes', 'alpha', 'spacing', 'tx_power', 'single_hop_snr_db', 'gamma_db',
                 'positions', 'random_phase', 'phase_seed'},
    'rounds': {'policy', 'm'},
    'analysis': {'b', 'epsilon', 'term_budget'},
    'monte_carlo': {'trials', 'seed', 'symbol_model', 'chunk_size', 'max_node', 'max_rounds', 'noiseless'},
    'output': {'directory', 'gnuplot'},
    'documentation': {'format'},
}

POLICY_NAMES = {'uniform': PolicyKind.UNIFORM, 'adaptive_min': PolicyKind.ADAPTIVE_MIN}


@dataclass
class ExperimentConfig:
    """Validated experiment configuration; defaults reproduce the 20 dB numerical setup."""
    n_nodes: int = 8
    alpha_list: List[float] = field(default_factory=lambda: [2.1, 3.0, 4.0])
    single_hop_snr_db: float = 20.0
    gamma_db: float = 10.0
    m_list: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    policy: PolicyKind = PolicyKind.UNIFORM
    spacing: float = 1.0
    p_t: float = 1.0
    positions: Optional[List[float]] = None
    random_phase: bool = False
    phase_seed: int = 0
    b: Optional[float] = None
    epsilon: float = 1e-9
    term_budget: int = 10 ** 6
    mc_config: Optional[McConfig] = None
    mc_max_node: int = 6
    mc_max_rounds: int = 3
    mc_noiseless: bool = False
    output_dir: str = './output'
    gnuplot: bool = False
    doc_format: Optional[str] = 'markdown'

    @property
    def gamma(self) -> float:
        return db_to_linear(self.gamma_db)

    def scenario(self, policy: Optional[RoundsPolicy] = None) -> ScenarioConfig:
        """Scenario for one rounds policy; the configured policy when none is given."""
        if policy is None:
            policy = RoundsPolicy.adaptive_min() if self.policy is PolicyKind.ADAPTIVE_MIN \
                else RoundsPolicy.uniform(self.m_list[0])
        return ScenarioConfig(
            gamma=self.gamma,
            single_hop_snr_db=self.single_hop_snr_db,
            m_policy=policy,
            b=self.b,
            epsilon=self.epsilon
        )

    def channel_model(self, alpha: float, n_nodes: Optional[int] = None) -> ChannelModel:
        n_nodes = self.n_nodes if n_nodes is None else n_nodes
        positions = self.positions if n_nodes == self.n_nodes else None
        return build_channel_matrix(
            n_nodes,
            alpha,
            spacing=self.spacing,
            p_t=self.p_t,
            single_hop_snr_db=self.single_hop_snr_db,
            positions=positions,
            random_phase=self.random_phase,
            phase_seed=self.phase_seed
        )

    def with_overrides(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> 'ExperimentConfig':
        """Copy with command-line overrides applied."""
        config = self
        if output_dir:
            config = replace(config, output_dir=output_dir)
        if seed is not None and config.mc_config is not None:
            config = replace(config, mc_config=replace(config.mc_config, seed=seed))
        return config


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and not math.isnan(value)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _as_list(value: Any) -> List[Any]:
    return list(value) if isinstance(value, (list, tuple)) else [value]


class ConfigParser:
    """Parser for JSON experiment configuration files."""

    def __init__(self, config_path: str):
        """Initialize the configuration parser.

        Args:
            config_path: Path to the JSON configuration file
        """
        self.config_path = config_path
        self.logger = logging.getLogger(__name__)
        self.violations: List[str] = []

    def parse(self) -> ExperimentConfig:
        """Read, validate and convert the configuration file.

        Returns:
            ExperimentConfig with defaults for every missing key

        Raises:
            ConfigError: On unreadable files, JSON syntax errors or invalid values
        """
        raw = self._load()
        return self.from_dict(raw)

    def _load(self) -> Dict[str, Any]:
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
        except FileNotFoundError:
            self.logger.error(f"Configuration file not found: {self.config_path}")
            raise ConfigError(f"Configuration file not found: {self.config_path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{self.config_path}:{e.lineno}:{e.colno}: {e.msg}")
        if not isinstance(raw, dict):
            raise ConfigError(f"{self.config_path}: top level must be an object")
        return raw

    def from_dict(self, raw: Dict[str, Any]) -> ExperimentConfig:
        """Validate a decoded configuration document."""
        self.violations = []
        self._warn_unknown(raw)

        scenario = self._section(raw, 'scenario')
        rounds = self._section(raw, 'rounds')
        analysis = self._section(raw, 'analysis')
        output = self._section(raw, 'output')
        documentation = self._section(raw, 'documentation')
        defaults = ExperimentConfig()

        n_nodes = scenario.get('n_nodes', defaults.n_nodes)
        if not _is_int(n_nodes) or n_nodes < 2:
            self.violations.append(f"scenario.n_nodes must be an integer >= 2 (got {n_nodes!r})")

        alpha_list = _as_list(scenario.get('alpha', defaults.alpha_list))
        if not alpha_list:
            self.violations.append("scenario.alpha must not be empty")
        for alpha in alpha_list:
            if not _is_number(alpha) or alpha <= 0:
                self.violations.append(f"scenario.alpha values must be > 0 (got {alpha!r})")

        single_hop_snr_db = self._number(scenario, 'single_hop_snr_db', defaults.single_hop_snr_db, 'scenario')
        gamma_db = self._number(scenario, 'gamma_db', defaults.gamma_db, 'scenario')
        if _is_number(gamma_db) and gamma_db < 0:
            self.violations.append(f"scenario.gamma_db must be >= 0 dB so that gamma >= 1 (got {gamma_db})")
        spacing = self._number(scenario, 'spacing', defaults.spacing, 'scenario', positive=True)
        p_t = self._number(scenario, 'tx_power', defaults.p_t, 'scenario', positive=True)

        random_phase = self._flag(scenario, 'random_phase', defaults.random_phase, 'scenario')
        phase_seed = scenario.get('phase_seed', defaults.phase_seed)
        if not _is_int(phase_seed) or phase_seed < 0:
            self.violations.append(f"scenario.phase_seed must be a non-negative integer (got {phase_seed!r})")

        positions = scenario.get('positions')
        if positions is not None:
            if not isinstance(positions, list) or not all(_is_number(p) for p in positions):
                self.violations.append("scenario.positions must be a list of numbers")
            elif _is_int(n_nodes) and len(positions) != n_nodes:
                self.violations.append(f"scenario.positions must have {n_nodes} entries (got {len(positions)})")
            elif any(b <= a for a, b in zip(positions, positions[1:])):
                self.violations.append("scenario.positions must be strictly increasing")

        m_list = _as_list(rounds.get('m', defaults.m_list))
        if not m_list:
            self.violations.append("rounds.m must not be empty")
        for m in m_list:
            if not _is_int(m) or m < 0:
                self.violations.append(f"rounds.m values must be integers >= 0 (got {m!r})")

        policy_name = rounds.get('policy', 'uniform')
        if policy_name not in POLICY_NAMES:
            self.violations.append(f"rounds.policy must be one of {sorted(POLICY_NAMES)} (got {policy_name!r})")

        b = analysis.get('b')
        if b is not None and (not _is_number(b) or b <= 0):
            self.violations.append(f"analysis.b must be > 0 (got {b!r})")
        epsilon = self._number(analysis, 'epsilon', defaults.epsilon, 'analysis', positive=True)
        term_budget = analysis.get('term_budget', defaults.term_budget)
        if not _is_int(term_budget) or term_budget < 1:
            self.violations.append(f"analysis.term_budget must be a positive integer (got {term_budget!r})")

        mc_config, mc_extra = self._monte_carlo(raw, defaults)

        output_dir = output.get('directory', defaults.output_dir)
        gnuplot = self._flag(output, 'gnuplot', defaults.gnuplot, 'output')
        if not isinstance(output_dir, str) or not output_dir:
            self.violations.append("output.directory must be a non-empty string")
        doc_format = documentation.get('format', defaults.doc_format)
        if doc_format not in (None, 'markdown'):
            self.violations.append(f"documentation.format must be 'markdown' or null (got {doc_format!r})")

        if self.violations:
            for violation in self.violations:
                self.logger.error(f"Invalid configuration: {violation}")
            raise ConfigError(f"Invalid configuration {self.config_path}", self.violations)

        return ExperimentConfig(
            n_nodes=n_nodes,
            alpha_list=[float(a) for a in alpha_list],
            single_hop_snr_db=float(single_hop_snr_db),
            gamma_db=float(gamma_db),
            m_list=list(m_list),
            policy=POLICY_NAMES[policy_name],
            spacing=float(spacing),
            p_t=float(p_t),
            positions=[float(p) for p in positions] if positions is not None else None,
            random_phase=random_phase,
            phase_seed=phase_seed,
            b=float(b) if b is not None else None,
            epsilon=float(epsilon),
            term_budget=term_budget,
            mc_config=mc_config,
            output_dir=output_dir,
            gnuplot=gnuplot,
            doc_format=doc_format,
            **mc_extra
        )

    def _monte_carlo(self, raw: Dict[str, Any], defaults: ExperimentConfig):
        if raw.get('monte_carlo') is None:
            return None, {}
        mc = self._section(raw, 'monte_carlo')
        trials = mc.get('trials', 100000)
        seed = mc.get('seed', 1)
        chunk_size = mc.get('chunk_size', 10000)
        max_node = mc.get('max_node', defaults.mc_max_node)
        max_rounds = mc.get('max_rounds', defaults.mc_max_rounds)
        symbol_name = mc.get('symbol_model', SymbolModel.GAUSSIAN.value)

        start = len(self.violations)
        noiseless = self._flag(mc, 'noiseless', defaults.mc_noiseless, 'monte_carlo')
        if not _is_int(trials) or trials < 1:
            self.violations.append(f"monte_carlo.trials must be an integer >= 1 (got {trials!r})")
        if not _is_int(seed) or not 0 <= seed < 2 ** 64:
            self.violations.append(f"monte_carlo.seed must be an unsigned 64-bit integer (got {seed!r})")
        if not _is_int(chunk_size) or chunk_size < 1:
            self.violations.append(f"monte_carlo.chunk_size must be an integer >= 1 (got {chunk_size!r})")
        if not _is_int(max_node) or max_node < 3:
            self.violations.append(f"monte_carlo.max_node must be an integer >= 3 (got {max_node!r})")
        if not _is_int(max_rounds) or max_rounds < 0:
            self.violations.append(f"monte_carlo.max_rounds must be an integer >= 0 (got {max_rounds!r})")
        if symbol_name not in {s.value for s in SymbolModel}:
            self.violations.append(
                f"monte_carlo.symbol_model must be one of {[s.value for s in SymbolModel]} (got {symbol_name!r})"
            )
        if len(self.violations) > start:
            return None, {}

        config = McConfig(trials=trials, seed=seed, symbol_model=SymbolModel(symbol_name), chunk_size=chunk_size)
        extra = {
            'mc_max_node': max_node,
            'mc_max_rounds': max_rounds,
            'mc_noiseless': noiseless,
        }
        return config, extra

    def _section(self, raw: Dict[str, Any], name: str) -> Dict[str, Any]:
        section = raw.get(name) or {}
        if not isinstance(section, dict):
            self.violations.append(f"{name} must be an object")
            return {}
        return section

    def _number(self, section: Dict[str, Any], key: str, default: float, prefix: str,
                positive: bool = False) -> Any:
        value = section.get(key, default)
        if not _is_number(value):
            self.violations.append(f"{prefix}.{key} must be a number (got {value!r})")
        elif positive and value <= 0:
            self.violations.append(f"{prefix}.{key} must be > 0 (got {value})")
        return value

    def _flag(self, section: Dict[str, Any], key: str, default: bool, prefix: str) -> bool:
        value = section.get(key, default)
        if not isinstance(value, bool):
            self.violations.append(f"{prefix}.{key} must be true or false (got {value!r})")
            return default
        return value

    def _warn_unknown(self, raw: Dict[str, Any]) -> None:
        for name, section in raw.items():
            if name not in KNOWN_SECTIONS:
                self.logger.warning(f"Ignoring unknown section '{name}'")
            elif isinstance(section, dict):
                for key in section:
                    if key not in KNOWN_SECTIONS[name]:
                        self.logger.warning(f"Ignoring unknown key '{name}.{key}'")


def parse_config(config_path: str) -> ExperimentConfig:
    """Parse an experiment configuration file.

    Args:
        config_path: Path to the JSON configuration file

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: If the file cannot be parsed or violates an invariant
    """
    parser = ConfigParser(config_path)
    return parser.parse()
