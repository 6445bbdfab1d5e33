import logging
import math
import sqlite3
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

MEMORY = ":memory:"
DEFAULT_DB_PATH = ".signal_recovery.db"

RESULT_COLUMNS = ("trials", "rep_rate", "sig_rate", "mean_rep_err", "mean_sig_err", "solver_dnf")


class CellStatus(str, Enum):
    NEW = 'NEW'
    SUCCESS = 'SUCCESS'
    FAILED = 'FAILED'


class ResultStore:
    """Persists phase-grid runs, their cells and aggregated cell results in SQLite."""

    @staticmethod
    def in_memory() -> 'ResultStore':
        return ResultStore(MEMORY)

    @staticmethod
    def file_db(db_path: str | Path) -> 'ResultStore':
        return ResultStore(db_path)

    def __init__(self, db_path: str | Path):
        self.db_path = db_path
        self.conn = None
        if str(db_path) == MEMORY:
            self.initialize()

    def initialize(self):
        if self.conn:
            return
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self._create_tables()

    def _create_tables(self):
        cursor = self.conn.cursor()
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                run_key TEXT PRIMARY KEY,
                config TEXT NOT NULL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        ''')
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS cells (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_key TEXT NOT NULL,
                cell_index INTEGER NOT NULL,
                gamma REAL,
                rho REAL,
                m INTEGER,
                k INTEGER,
                status TEXT,
                error_message TEXT,
                updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                UNIQUE (run_key, cell_index),
                FOREIGN KEY(run_key) REFERENCES runs(run_key)
            )
        ''')
        # NaN is stored as NULL by sqlite; get_results maps it back.
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS results (
                cell_id INTEGER PRIMARY KEY,
                trials INTEGER,
                rep_rate REAL,
                sig_rate REAL,
                mean_rep_err REAL,
                mean_sig_err REAL,
                solver_dnf INTEGER,
                FOREIGN KEY(cell_id) REFERENCES cells(id)
            )
        ''')
        self.conn.commit()

    def register_run(self, run_key: str, config_json: str):
        cursor = self.conn.cursor()
        cursor.execute('INSERT OR IGNORE INTO runs (run_key, config) VALUES (?, ?)', (run_key, config_json))
        self.conn.commit()

    def get_run_config(self, run_key: str) -> Optional[str]:
        cursor = self.conn.cursor()
        cursor.execute('SELECT config FROM runs WHERE run_key = ?', (run_key,))
        row = cursor.fetchone()
        return row['config'] if row else None

    def add_cell(self, run_key: str, cell_index: int, gamma: float, rho: float, m: int, k: int) -> int:
        cursor = self.conn.cursor()
        try:
            cursor.execute('''
                INSERT INTO cells (run_key, cell_index, gamma, rho, m, k, status)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', (run_key, cell_index, gamma, rho, m, k, CellStatus.NEW.value))
            self.conn.commit()
            return cursor.lastrowid
        except sqlite3.IntegrityError:
            existing = self.get_cell(run_key, cell_index)
            if existing:
                return existing['id']
            raise

    def get_cell(self, run_key: str, cell_index: int) -> Optional[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute('SELECT * FROM cells WHERE run_key = ? AND cell_index = ?', (run_key, cell_index))
        row = cursor.fetchone()
        return dict(row) if row else None

    def get_cells_by_status(self, run_key: str, status: List[CellStatus], limit: int = 1000) -> List[Dict[str, Any]]:
        cursor = self.conn.cursor()
        placeholders = ','.join(['?'] * len(status))
        query = f'SELECT * FROM cells WHERE run_key = ? AND status IN ({placeholders}) ORDER BY cell_index LIMIT ?'
        cursor.execute(query, [run_key] + [s.value for s in status] + [limit])
        return [dict(row) for row in cursor.fetchall()]

    def update_status(self, cell_id: int, status: CellStatus, error: str = None):
        cursor = self.conn.cursor()
        cursor.execute('''
            UPDATE cells
            SET status = ?, error_message = ?, updated_at = CURRENT_TIMESTAMP
            WHERE id = ?
        ''', (status.value, error, cell_id))
        self.conn.commit()

    def save_result(self, cell_id: int, record: Dict[str, Any]):
        """Stores one cell's aggregate and marks the cell SUCCESS in a single transaction."""
        with self.conn:
            self.conn.execute(f'''
                INSERT OR REPLACE INTO results (cell_id, {", ".join(RESULT_COLUMNS)})
                VALUES (?, {", ".join("?" * len(RESULT_COLUMNS))})
            ''', [cell_id] + [record[column] for column in RESULT_COLUMNS])
            self.conn.execute('''
                UPDATE cells SET status = ?, error_message = NULL, updated_at = CURRENT_TIMESTAMP
                WHERE id = ?
            ''', (CellStatus.SUCCESS.value, cell_id))

    def get_results(self, run_key: str) -> List[Dict[str, Any]]:
        """Completed cells of a run joined with their results, in cell order."""
        cursor = self.conn.cursor()
        cursor.execute(f'''
            SELECT c.cell_index, c.gamma, c.rho, c.m, c.k, {", ".join("r." + col for col in RESULT_COLUMNS)}
            FROM cells c JOIN results r ON r.cell_id = c.id
            WHERE c.run_key = ? AND c.status = ?
            ORDER BY c.cell_index
        ''', (run_key, CellStatus.SUCCESS.value))
        rows = []
        for row in cursor.fetchall():
            record = dict(row)
            for column in ("mean_rep_err", "mean_sig_err"):
                if record[column] is None:
                    record[column] = math.nan
            rows.append(record)
        return rows

    def close(self):
        if self.conn and str(self.db_path) != MEMORY:
            self.conn.close()
            self.conn = None
