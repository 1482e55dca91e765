"""
Unit tests for the command-line entry point.
"""

import json
import logging
import os
from unittest.mock import patch

import numpy as np
import pytest

from src.neural_weave.cli import main
from src.neural_weave.repositories.geometry_repository import GeometryRepository
from src.neural_weave.utils.logging import LoggerManager


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path):
    """Run every command in an empty working directory with no NEURAL_WEAVE_* variables."""
    cwd = os.getcwd()
    os.chdir(tmp_path)
    with patch.dict(os.environ, {}, clear=True):
        yield tmp_path
    os.chdir(cwd)
    LoggerManager.reset()
    logging.getLogger().handlers.clear()


@pytest.mark.unit
class TestCli:
    """Test command dispatch and exit codes."""

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            main(['--version'])

        assert exit_info.value.code == 0
        assert 'neural-weave' in capsys.readouterr().out

    def test_command_required(self):
        with pytest.raises(SystemExit):
            main([])

    def test_gen_pattern(self, tmp_path, capsys):
        out = tmp_path / "plain.wwgm"

        code = main(['gen-pattern', '--pattern', '0', '--resolution', '16', '--out', str(out), '--png', str(tmp_path / "p")])

        assert code == 0
        assert GeometryRepository().load(out).resolution == 16
        assert (tmp_path / "p_normal.png").exists()
        assert "16x16 texels" in capsys.readouterr().out

    def test_compare(self, tmp_path, capsys):
        np.save(tmp_path / "a.npy", np.zeros((4, 4, 3), dtype=np.float32))
        np.save(tmp_path / "b.npy", np.full((4, 4, 3), 0.5, dtype=np.float32))

        code = main(['compare', str(tmp_path / "a.npy"), str(tmp_path / "b.npy"), '--heat-map', str(tmp_path / "d.png")])

        assert code == 0
        assert "MSE 0.25" in capsys.readouterr().out
        assert (tmp_path / "d.png").exists()

    def test_domain_error_exit_code(self, tmp_path, capsys):
        code = main(['render', '--scene', str(tmp_path / "missing.json"), '--mode', 'reference', '--out', 'x'])

        assert code == 1
        assert capsys.readouterr().err.startswith("error: ")

    def test_neural_render_without_weights(self, tmp_path, capsys):
        scene = tmp_path / "scene.json"
        scene.write_text(json.dumps({
            'camera': {'position': [0, 0, 2], 'look_at': [0, 0, 0], 'width': 4, 'height': 4},
            'light': {'kind': 'directional', 'intensity': [1, 1, 1], 'direction': [0, 0, -1]},
            'materials': {'cloth': {'pattern': 0, 'twist': 0, 'inclination': 30, 'roughness': 0.5, 'height_scale': 1}},
            'objects': [{'type': 'quad', 'origin': [-1, -1, 0], 'edge_u': [2, 0, 0], 'edge_v': [0, 2, 0], 'material': 'cloth'}],
        }))

        code = main(['--set', f'weights_path={tmp_path / "none.wwnn"}', 'render', '--scene', str(scene), '--out', 'x'])

        assert code == 1
        assert "Weights file not found" in capsys.readouterr().err

    def test_bad_override(self, capsys):
        code = main(['--set', 'training_settings.epochs=0', 'compare', 'a.npy', 'b.npy'])

        assert code == 1

    def test_config_template_round_trips_through_validate(self, tmp_path, capsys):
        out = tmp_path / "config.json"

        assert main(['config-template', '--out', str(out)]) == 0
        assert json.loads(out.read_text())['render_settings']['spp'] == 256
        assert main(['validate-config', str(out)]) == 0
        assert "is valid" in capsys.readouterr().out

    def test_config_template_to_stdout(self, capsys):
        code = main(['config-template'])

        assert code == 0
        assert json.loads(capsys.readouterr().out)['training_settings']['epochs'] == 10

    def test_validate_config_reports_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({'render_settings': {'spp': 0}}))

        code = main(['validate-config', str(bad)])

        assert code == 1
        assert "invalid: " in capsys.readouterr().out
