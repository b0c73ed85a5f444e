# Standard library imports
import logging

# Third party imports
import pytest

# Local imports
from pycloudgen.utils.logger import setup_logging


def test_setup_logging_with_validation_data(tmp_path):
    log_file = tmp_path / "run.log"
    logger = setup_logging("pycloudgen", "debug", str(log_file))
    assert logger.level == logging.DEBUG
    assert len(logger.handlers) == 2

    logging.getLogger("pycloudgen.training").debug("epoch 1 done")
    for handler in logger.handlers:
        handler.flush()
    assert "DEBUG | pycloudgen.training | epoch 1 done" in log_file.read_text(encoding="utf-8")

    # a second call replaces the handlers instead of stacking them
    assert len(setup_logging("pycloudgen", "INFO").handlers) == 1


def test_setup_logging_bad_arguments():
    with pytest.raises(TypeError):
        setup_logging(3)

    with pytest.raises(TypeError):
        setup_logging("pycloudgen", 10)

    with pytest.raises(ValueError):
        setup_logging("pycloudgen", "LOUD")
