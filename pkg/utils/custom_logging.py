# SPDX-License-Identifier: MIT
#
"""Define a custom logger for the FSFNet lab"""
import os
import sys
import logging

from utils.config import read_config


def setup_custom_logger(name):
    config = read_config()
    formatter = logging.Formatter(fmt='%(asctime)s %(levelname)-8s %(message)s', datefmt='%Y-%m-%d %H:%M:%S')
    custom_logger = logging.getLogger(name)
    custom_logger.setLevel(config.get('logging', 'level', fallback='INFO').upper())

    log_file = config.get('logging', 'file', fallback='')
    if log_file:
        if os.path.dirname(log_file):
            os.makedirs(os.path.dirname(log_file), exist_ok=True)
        handler = logging.FileHandler(log_file, mode='a')
        handler.setFormatter(formatter)
        custom_logger.addHandler(handler)

    screen_handler = logging.StreamHandler(stream=sys.stdout)
    screen_handler.setFormatter(formatter)
    custom_logger.addHandler(screen_handler)
    return custom_logger


logger = setup_custom_logger('FSFNET')
