"""
End-to-end tests of the handsyn command line
"""

import pytest
from click.testing import CliRunner

from conftest import build_design
from main import cli
from services.design_io import parse_design_file, serialize_catalog, write_design_file
from services.cancellation import default_spring_catalog
from services.hand_model import default_iss_hand

pytestmark = pytest.mark.integration


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, list(args), catch_exceptions=False)


@pytest.fixture
def bad_arm_design(tmp_path, designs_dir):
    text = (designs_dir / 'iss_hand.yaml').read_text(encoding='utf-8')
    path = tmp_path / 'bad_arm.yaml'
    path.write_text(text.replace('{joint: F1P, arm: 8.0, sign: 1}', '{joint: F1P, arm: -1.0, sign: 1}'),
                    encoding='utf-8')
    return path


class TestCheck:

    def test_builtin_hand_passes(self, runner):
        result = _invoke(runner, 'check')
        assert result.exit_code == 0
        assert 'max |net| < 84 N·mm: PASS' in result.output

    def test_zero_stiction_fails(self, runner):
        result = _invoke(runner, 'check', '--stiction', '0')
        assert result.exit_code == 6
        assert 'FAIL' in result.output

    def test_invalid_override_is_usage_error(self, runner):
        result = _invoke(runner, 'check', '--samples', '1')
        assert result.exit_code == 2


class TestClassify:

    def test_builtin_hand(self, runner, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'classify')
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert sum('\tTA+MJT\t2' in line for line in lines) == 3
        assert sum('\tSA+MTS\t1' in line for line in lines) == 2
        assert (output_dir / 'paradigms.csv').exists()


class TestValidate:

    def test_shipped_design(self, runner, designs_dir):
        result = _invoke(runner, 'validate', str(designs_dir / 'iss_hand.yaml'))
        assert result.exit_code == 0
        assert 'iss_hand: OK' in result.output

    def test_violation_exit_code(self, runner, bad_arm_design):
        result = _invoke(runner, 'validate', str(bad_arm_design))
        assert result.exit_code == 4
        assert 'tendons.F1_flex.stops[0].arm' in result.output

    def test_invalid_design_blocks_other_commands(self, runner, bad_arm_design):
        assert _invoke(runner, 'check', str(bad_arm_design)).exit_code == 4

    def test_parse_error_exit_code(self, runner, tmp_path):
        path = tmp_path / 'broken.yaml'
        path.write_text('motor: [1, 2\n', encoding='utf-8')
        result = _invoke(runner, 'check', str(path))
        assert result.exit_code == 3
        assert 'broken.yaml' in result.output


class TestSimulate:

    def test_trace_and_events(self, runner, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'simulate', '--contact', 'F1A:0.3', '--check-kkt')
        assert result.exit_code == 0
        assert 'tendon-went-slack\tF1_abd' in result.output
        trace = (output_dir / 'closing_trace.csv').read_text(encoding='utf-8').splitlines()
        assert len(trace) == 101
        assert trace[0].startswith('motor_angle,angle_TP,')
        events = (output_dir / 'closing_events.csv').read_text(encoding='utf-8')
        assert 'contact-activated,F1A' in events

    def test_bad_contact_syntax(self, runner):
        result = runner.invoke(cli, ['simulate', '--contact', 'F1A'])
        assert result.exit_code == 2

    def test_unknown_contact_joint(self, runner, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'simulate', '--contact', 'ZZ:0.3')
        assert result.exit_code == 5
        assert not (output_dir / 'closing_trace.csv').exists()


class TestProfile:

    def test_byte_identical_reruns(self, runner, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert _invoke(runner, '-o', str(first), 'profile', '-n', '200').exit_code == 0
        assert _invoke(runner, '-o', str(second), 'profile', '-n', '200').exit_code == 0
        table = (first / 'torque_profile.csv').read_bytes()
        assert table == (second / 'torque_profile.csv').read_bytes()
        lines = table.decode('utf-8').splitlines()
        assert lines[0] == 'motor_angle,agonist,antagonist,net,upper_band,lower_band,backdrive_margin'
        assert len(lines) == 201


class TestSelectSprings:

    def test_single_entry_catalog(self, runner, tmp_path, output_dir):
        catalog = tmp_path / 'catalog.yaml'
        catalog.write_text(serialize_catalog(default_spring_catalog()[5:6]), encoding='utf-8')
        result = _invoke(runner, '-o', str(output_dir), 'select-springs', '--catalog', str(catalog), '-n', '200')
        assert result.exit_code == 0
        assert 'k = 20' in result.output
        assert 'PASS' in result.output
        chosen = parse_design_file(output_dir / 'design_with_springs.yaml')
        assert chosen == default_iss_hand()
        assert (output_dir / 'spring_selection.csv').exists()

    def test_empty_catalog(self, runner, tmp_path, output_dir):
        catalog = tmp_path / 'catalog.yaml'
        catalog.write_text('springs: []\n', encoding='utf-8')
        result = _invoke(runner, '-o', str(output_dir), 'select-springs', '--catalog', str(catalog))
        assert result.exit_code == 7


class TestOptimize:

    @pytest.fixture
    def problem_file(self, tmp_path):
        design = build_design(
            joints=[('J', 0.0, 1.0, 1.0, 0.5)],
            tendons=[('J_flex', 'TA', 1, [('J', 10.0, 1)])],
            motor=(5.0, 0.0, 0.4, 84.0),
            name='one_joint',
        )
        write_design_file(design, tmp_path / 'one_joint.yaml')
        path = tmp_path / 'problem.yaml'
        path.write_text(
            'design: one_joint.yaml\n'
            'targets:\n'
            '- [0.2]\n'
            '- [0.6]\n'
            'parameters:\n'
            '- {path: tendon.J_flex.J.arm, lower: 5.0, upper: 20.0}\n'
            'restarts: 2\n',
            encoding='utf-8'
        )
        return path

    def test_writes_artifacts(self, runner, problem_file, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'optimize', str(problem_file), '--budget', '100')
        assert result.exit_code == 0
        assert 'tendon.J_flex.J.arm\t5' in result.output
        for name in ('optimized_design.yaml', 'grasp_residuals.csv', 'objective_history.csv', 'run_report.csv'):
            assert (output_dir / name).exists()
        history = (output_dir / 'objective_history.csv').read_text(encoding='utf-8').splitlines()
        assert len(history) <= 101

    def test_budget_too_small(self, runner, problem_file, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'optimize', str(problem_file), '--budget', '3')
        assert result.exit_code == 8


class TestExportDefault:

    def test_round_trip(self, runner, output_dir):
        result = _invoke(runner, '-o', str(output_dir), 'export-default')
        assert result.exit_code == 0
        assert parse_design_file(output_dir / 'iss_hand.yaml') == default_iss_hand()
