# SPDX-License-Identifier: MIT
#
"""This module implements the connection to the SQLite3 database persisting training runs, evaluation reports and ablation results"""
import json
import os
from datetime import datetime

import pandas as pd
from sqlalchemy import create_engine
from sqlalchemy.sql import text

from utils.config import read_config
from utils.custom_logging import logger
from utils.util import read_sql_file

SCHEMA_FILE = os.path.join(os.path.dirname(__file__), 'schema.sql')
ENGINE = None
DATABASE = None


def use_database(path):
    """Switch the store to another SQLite file; None falls back to [storage] database of config.cfg"""
    global ENGINE, DATABASE
    DATABASE = path
    ENGINE = None


def _engine():
    global ENGINE
    if ENGINE is None:
        path = DATABASE or read_config()['storage'].get('database', 'results/experiments.sqlite')
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        url = f'sqlite:///{path}'
        logger.debug('Connect to database: %s', url)
        ENGINE = create_engine(url)
        with ENGINE.begin() as conn:
            for statement in read_sql_file(SCHEMA_FILE).split(';'):
                if len(statement.strip()) > 0:
                    conn.execute(text(statement))
    return ENGINE


def _now():
    return datetime.now().isoformat(timespec='seconds')


def register_run(name: str, config: dict, seed: int, steps: int, final_loss=None, best_mean_iou=None, checkpoint=None) -> int:
    with _engine().begin() as conn:
        stmt = text('INSERT INTO runs (name, config_json, seed, steps, final_loss, best_mean_iou, checkpoint, time) '
                    'VALUES (:name, :config_json, :seed, :steps, :final_loss, :best_mean_iou, :checkpoint, :time)')
        result = conn.execute(stmt, {'name': name, 'config_json': json.dumps(config, sort_keys=True), 'seed': seed, 'steps': steps,
                                     'final_loss': final_loss, 'best_mean_iou': best_mean_iou, 'checkpoint': checkpoint and str(checkpoint),
                                     'time': _now()})
        return result.lastrowid


def register_evaluation(checkpoint, dataset, report: dict) -> int:
    with _engine().begin() as conn:
        stmt = text('INSERT INTO evaluations (checkpoint, dataset, mean_iou, pixel_accuracy, scored_pixels, report_json, time) '
                    'VALUES (:checkpoint, :dataset, :mean_iou, :pixel_accuracy, :scored_pixels, :report_json, :time)')
        result = conn.execute(stmt, {'checkpoint': str(checkpoint), 'dataset': str(dataset), 'mean_iou': report['mean_iou'],
                                     'pixel_accuracy': report['pixel_accuracy'], 'scored_pixels': report['scored_pixels'],
                                     'report_json': json.dumps(report, sort_keys=True), 'time': _now()})
        return result.lastrowid


def register_ablation_result(ablation: str, variant: str, variant_order: int, seed: int, mean_iou: float, pixel_accuracy: float, run_id=None):
    """Insert or replace the result of one (variant, seed) cell of an ablation"""
    with _engine().begin() as conn:
        stmt = text('INSERT OR REPLACE INTO ablation_results (ablation, variant, variant_order, seed, mean_iou, pixel_accuracy, run_id) '
                    'VALUES (:ablation, :variant, :variant_order, :seed, :mean_iou, :pixel_accuracy, :run_id)')
        conn.execute(stmt, {'ablation': ablation, 'variant': variant, 'variant_order': variant_order, 'seed': seed, 'mean_iou': mean_iou,
                            'pixel_accuracy': pixel_accuracy, 'run_id': run_id})


def get_df(query, params=None) -> pd.DataFrame:
    with _engine().connect() as conn:
        result = conn.execute(text(query), params or {})
        return pd.DataFrame(result.fetchall(), columns=list(result.keys()))


def ablation_results(ablation: str) -> pd.DataFrame:
    return get_df('SELECT variant, variant_order, seed, mean_iou, pixel_accuracy FROM ablation_results WHERE ablation = :ablation '
                  'ORDER BY variant_order, seed', {'ablation': ablation})


def evaluations(checkpoint=None) -> pd.DataFrame:
    if checkpoint is None:
        return get_df('SELECT * FROM evaluations ORDER BY id')
    return get_df('SELECT * FROM evaluations WHERE checkpoint = :checkpoint ORDER BY id', {'checkpoint': str(checkpoint)})
