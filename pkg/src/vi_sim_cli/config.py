"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import errno
import logging
import os
import platform
import shutil

from os.path import expanduser, exists, dirname
from configobj import ConfigObj

from . import __version__

LOG_FORMAT = "%(asctime)s (%(process)d/%(threadName)s) %(name)s %(levelname)s - %(message)s"


def config_location():
    """Return absolute conf file path according to different OS."""
    if "XDG_CONFIG_HOME" in os.environ:
        return "%s/vi-sim/" % expanduser(os.environ["XDG_CONFIG_HOME"])
    elif platform.system() == "Windows":
        # USERPROFILE is typically C:\Users\{username}
        return "%s\\AppData\\Local\\vi-sim\\" % os.getenv("USERPROFILE")
    else:
        return expanduser("~/.config/vi-sim/")


def _load_config(user_config, default_config=None):
    config = ConfigObj()
    config.merge(ConfigObj(default_config, interpolation=False))
    config.merge(ConfigObj(expanduser(user_config), interpolation=False, encoding="utf-8"))
    config.filename = expanduser(user_config)

    return config


def ensure_dir_exists(path):
    """
    Create the parent directory of path.

    Ignore existing destination. Raise error for other OSError, such as errno.EACCES (Permission denied),
    errno.ENOSPC (No space left on device)
    """
    parent_dir = expanduser(dirname(path))
    if not parent_dir:
        return
    try:
        os.makedirs(parent_dir)
    except OSError as exc:
        if exc.errno != errno.EEXIST:
            raise


def _write_default_config(source, destination, overwrite=False):
    destination = expanduser(destination)
    if not overwrite and exists(destination):
        return

    ensure_dir_exists(destination)
    shutil.copyfile(source, destination)


def get_config(clirc_file=None):
    """
    Get config for vi-sim.

    This config comes from either existing config in the OS, or create a config file in the OS, and write default config
    including in the package to it.
    """
    from .conf import __file__ as package_root

    package_root = os.path.dirname(package_root)

    clirc_file = clirc_file or "%sconfig" % config_location()
    default_config = os.path.join(package_root, "clirc")

    _write_default_config(default_config, clirc_file)

    return _load_config(clirc_file, default_config)


def initialize_logging(config):
    """Attach a file handler to the package logger according to [main] log_file and log_level."""
    log_file = config["main"]["log_file"]
    if log_file == "default":
        log_file = os.path.join(config_location(), "log")
    log_file = expanduser(log_file)
    log_level = config["main"].get("log_level", "INFO").upper()

    ensure_dir_exists(log_file)
    handler = logging.FileHandler(log_file, encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))

    # numpy/scipy runtime warnings arrive through py.warnings once captured
    for name in ("vi_sim_cli", "py.warnings"):
        logger = logging.getLogger(name)
        for old in list(logger.handlers):
            logger.removeHandler(old)
            old.close()
        logger.addHandler(handler)
        logger.setLevel(getattr(logging, log_level, logging.INFO))
    logging.captureWarnings(True)

    root_logger = logging.getLogger("vi_sim_cli")

    root_logger.debug("initializing vi-sim %s logging, log file %s", __version__, log_file)
    return log_file
