import json
import logging

import pytest

from curvedrt.errors import (ConfigError, NoIntersection, InvalidMesh,
                             MissingModifiedElement, SingularSystem,
                             GramNotPositiveDefinite, IllConditioned,
                             exit_code_for)
from curvedrt.utils import (BracketFormatter, THREADS_ENV, element_map,
                            num_threads, parse_levels, save_opts)


@pytest.mark.parametrize('text,levels', [('2..5', [2, 3, 4, 5]),
                                         ('3,1,3', [1, 3]),
                                         ([4, 2], [2, 4]),
                                         ('2', [2])])
def test_parse_levels(text, levels):
    assert parse_levels(text) == levels


@pytest.mark.parametrize('text', ['5..2', 'a,b', ''])
def test_parse_levels_rejects(text):
    with pytest.raises(ConfigError):
        parse_levels(text)


def test_num_threads(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert num_threads() == 1
    monkeypatch.setenv(THREADS_ENV, '4')
    assert num_threads() == 4
    monkeypatch.setenv(THREADS_ENV, '0')
    assert num_threads() == 1
    monkeypatch.setenv(THREADS_ENV, 'many')
    with pytest.raises(ConfigError):
        num_threads()


@pytest.mark.parametrize('threads', [1, 4])
def test_element_map_keeps_order(threads):
    assert element_map(lambda t: t * t, range(50), threads) == \
        [t * t for t in range(50)]


@pytest.mark.parametrize('level,marker', [(logging.INFO, '[*]'),
                                          (logging.WARNING, '[!]'),
                                          (logging.ERROR, '[!!]'),
                                          (logging.DEBUG, '[-]')])
def test_bracket_formatter(level, marker):
    record = logging.LogRecord('curvedrt', level, __file__, 1, 'hello %s',
                               ('mesh',), None)
    assert BracketFormatter().format(record) == '{} hello mesh'.format(marker)


@pytest.mark.parametrize('err,code', [
    (ConfigError('x'), 2),
    (NoIntersection('x'), 3),
    (IllConditioned('x', cond=1e9), 3),
    (InvalidMesh('x'), 3),
    (MissingModifiedElement('x'), 4),
    (SingularSystem('x', pivot=0.), 4),
    (GramNotPositiveDefinite('x'), 4),
    (RuntimeError('x'), 1),
])
def test_exit_codes(err, code):
    assert exit_code_for(err) == code


def test_save_opts(tmp_path):
    save_opts({'k': 1, 'case': 'annulus-quarter'}, str(tmp_path / 'a' / 'b'))
    opts = json.loads((tmp_path / 'a' / 'b' / 'run.opts').read_text())
    assert opts == {'k': 1, 'case': 'annulus-quarter'}
