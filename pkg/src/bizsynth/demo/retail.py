"""A small retail database with seeded data, plus a few tables no analyst should need."""

from __future__ import annotations

import random
import sqlite3
from datetime import date, timedelta
from pathlib import Path

DDL = """
CREATE TABLE regions (
    region_id INTEGER PRIMARY KEY,
    region_name TEXT NOT NULL
);
CREATE TABLE stores (
    store_id INTEGER PRIMARY KEY,
    store_name TEXT NOT NULL,
    region_id INTEGER NOT NULL REFERENCES regions(region_id),
    store_format TEXT NOT NULL,
    opened_date TEXT NOT NULL
);
CREATE TABLE categories (
    category_id INTEGER PRIMARY KEY,
    category_name TEXT NOT NULL
);
CREATE TABLE suppliers (
    supplier_id INTEGER PRIMARY KEY,
    supplier_name TEXT NOT NULL,
    country TEXT NOT NULL,
    lead_time_days INTEGER NOT NULL
);
CREATE TABLE products (
    product_id INTEGER PRIMARY KEY,
    product_name TEXT NOT NULL,
    category_id INTEGER NOT NULL REFERENCES categories(category_id),
    supplier_id INTEGER NOT NULL REFERENCES suppliers(supplier_id),
    unit_cost REAL NOT NULL,
    list_price REAL NOT NULL,
    is_active INTEGER NOT NULL
);
CREATE TABLE customers (
    customer_id INTEGER PRIMARY KEY,
    full_name TEXT NOT NULL,
    segment TEXT NOT NULL,
    region_id INTEGER NOT NULL REFERENCES regions(region_id),
    loyalty_tier TEXT NOT NULL,
    signup_date TEXT NOT NULL
);
CREATE TABLE promotions (
    promotion_id INTEGER PRIMARY KEY,
    promo_name TEXT NOT NULL,
    discount_pct REAL NOT NULL,
    start_date TEXT NOT NULL,
    end_date TEXT NOT NULL
);
CREATE TABLE orders (
    order_id INTEGER PRIMARY KEY,
    customer_id INTEGER NOT NULL REFERENCES customers(customer_id),
    store_id INTEGER NOT NULL REFERENCES stores(store_id),
    order_date TEXT NOT NULL,
    channel TEXT NOT NULL,
    status TEXT NOT NULL,
    promotion_id INTEGER REFERENCES promotions(promotion_id)
);
CREATE TABLE order_items (
    order_item_id INTEGER PRIMARY KEY,
    order_id INTEGER NOT NULL REFERENCES orders(order_id),
    product_id INTEGER NOT NULL REFERENCES products(product_id),
    quantity INTEGER NOT NULL,
    unit_price REAL NOT NULL,
    discount REAL NOT NULL
);
CREATE TABLE returns (
    return_id INTEGER PRIMARY KEY,
    order_item_id INTEGER NOT NULL REFERENCES order_items(order_item_id),
    return_date TEXT NOT NULL,
    reason TEXT NOT NULL,
    refund_amount REAL NOT NULL
);
CREATE TABLE inventory_snapshots (
    snapshot_id INTEGER PRIMARY KEY,
    store_id INTEGER NOT NULL REFERENCES stores(store_id),
    product_id INTEGER NOT NULL REFERENCES products(product_id),
    snapshot_date TEXT NOT NULL,
    on_hand_qty INTEGER NOT NULL,
    reorder_point INTEGER NOT NULL
);
CREATE TABLE employees (
    employee_id INTEGER PRIMARY KEY,
    full_name TEXT NOT NULL,
    store_id INTEGER NOT NULL REFERENCES stores(store_id),
    role_title TEXT NOT NULL,
    hire_date TEXT NOT NULL
);
CREATE TABLE sales_targets (
    target_id INTEGER PRIMARY KEY,
    store_id INTEGER NOT NULL REFERENCES stores(store_id),
    quarter_label TEXT NOT NULL,
    target_revenue REAL NOT NULL
);
CREATE TABLE app_audit_log (
    log_id INTEGER PRIMARY KEY,
    event_type TEXT NOT NULL,
    created_at TEXT NOT NULL,
    payload TEXT
);
CREATE TABLE etl_job_runs (
    run_id INTEGER PRIMARY KEY,
    job_name TEXT NOT NULL,
    started_at TEXT NOT NULL,
    finished_at TEXT,
    run_status TEXT NOT NULL
);
CREATE TABLE ui_preferences (
    pref_id INTEGER PRIMARY KEY,
    user_login TEXT NOT NULL,
    theme TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
"""

REGIONS = ("North", "South", "East", "West")
CATEGORIES = ("Electronics", "Home", "Apparel", "Grocery", "Toys", "Beauty")
FORMATS = ("flagship", "standard", "outlet")
RETURN_REASONS = ("damaged", "wrong size", "not as described", "changed mind")
YEAR_START = date(2025, 1, 1)
QUARTERS = ("2025-Q1", "2025-Q2", "2025-Q3", "2025-Q4")


def _day(rng: random.Random, start: date = YEAR_START, span: int = 365) -> str:
    return (start + timedelta(days=rng.randrange(span))).isoformat()


def build_database(path: str | Path, seed: int = 7, num_orders: int = 2400) -> Path:
    """(Re)create the demo database at ``path``; identical for identical arguments."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()
    rng = random.Random(seed)
    conn = sqlite3.connect(path)
    try:
        conn.executescript(DDL)
        conn.executemany("INSERT INTO regions VALUES (?, ?)", list(enumerate(REGIONS, start=1)))

        stores = []
        for sid in range(1, 13):
            region = (sid - 1) % len(REGIONS) + 1
            fmt = FORMATS[(sid - 1) // len(REGIONS)]
            stores.append((sid, f"{REGIONS[region - 1]} Store {sid:02d}", region, fmt, _day(rng, date(2015, 1, 1), 3000)))
        conn.executemany("INSERT INTO stores VALUES (?, ?, ?, ?, ?)", stores)

        conn.executemany("INSERT INTO categories VALUES (?, ?)", list(enumerate(CATEGORIES, start=1)))
        suppliers = [
            (1, "Northwind Traders", "USA", 7),
            (2, "Lakeside Goods", "Canada", 10),
            (3, "Pacific Sourcing", "Vietnam", 35),
            (4, "Rhein Manufaktur", "Germany", 21),
            (5, "Sol Distribuciones", "Mexico", 14),
        ]
        conn.executemany("INSERT INTO suppliers VALUES (?, ?, ?, ?)", suppliers)

        products = []
        for pid in range(1, 41):
            cat = (pid - 1) % len(CATEGORIES) + 1
            cost = round(rng.uniform(3, 180), 2)
            price = round(cost * rng.uniform(1.25, 2.1), 2)
            active = 0 if pid % 9 == 0 else 1
            products.append((pid, f"{CATEGORIES[cat - 1]} Item {pid:03d}", cat, rng.randint(1, 5), cost, price, active))
        conn.executemany("INSERT INTO products VALUES (?, ?, ?, ?, ?, ?, ?)", products)

        tiers = ("bronze", "bronze", "silver", "gold")
        customers = [
            (cid, f"Customer {cid:04d}", rng.choice(("consumer", "consumer", "business")),
             rng.randint(1, len(REGIONS)), rng.choice(tiers), _day(rng, date(2020, 1, 1), 1800))
            for cid in range(1, 401)
        ]
        conn.executemany("INSERT INTO customers VALUES (?, ?, ?, ?, ?, ?)", customers)

        promotions = [
            (1, "Winter Clearance", 0.20, "2025-01-02", "2025-01-31"),
            (2, "Spring Refresh", 0.10, "2025-04-01", "2025-04-20"),
            (3, "Back to School", 0.15, "2025-08-01", "2025-08-31"),
            (4, "Black Friday", 0.25, "2025-11-24", "2025-11-30"),
            (5, "Holiday Gifting", 0.10, "2025-12-10", "2025-12-24"),
        ]
        conn.executemany("INSERT INTO promotions VALUES (?, ?, ?, ?, ?)", promotions)

        orders, items = [], []
        item_id = 0
        price_of = {p[0]: p[5] for p in products}
        for oid in range(1, num_orders + 1):
            day = _day(rng)
            promo = next((p[0] for p in promotions if p[3] <= day <= p[4]), None)
            if promo is not None and rng.random() < 0.4:
                promo = None
            status = rng.choices(("completed", "cancelled", "returned"), weights=(86, 9, 5))[0]
            channel = "online" if rng.random() < 0.38 else "in_store"
            orders.append((oid, rng.randint(1, len(customers)), rng.randint(1, len(stores)), day, channel, status, promo))
            for _ in range(rng.randint(1, 4)):
                item_id += 1
                pid = rng.randint(1, len(products))
                disc = next((p[2] for p in promotions if p[0] == promo), 0.0) if promo else rng.choice((0.0, 0.0, 0.0, 0.05))
                items.append((item_id, oid, pid, rng.randint(1, 5), price_of[pid], disc))
        conn.executemany("INSERT INTO orders VALUES (?, ?, ?, ?, ?, ?, ?)", orders)
        conn.executemany("INSERT INTO order_items VALUES (?, ?, ?, ?, ?, ?)", items)

        status_of = {o[0]: (o[5], o[3]) for o in orders}
        returns = []
        for it in items:
            status, day = status_of[it[1]]
            if status == "returned" or (status == "completed" and rng.random() < 0.02):
                back = (date.fromisoformat(day) + timedelta(days=rng.randint(2, 30))).isoformat()
                refund = round(it[3] * it[4] * (1 - it[5]), 2)
                returns.append((len(returns) + 1, it[0], back, rng.choice(RETURN_REASONS), refund))
        conn.executemany("INSERT INTO returns VALUES (?, ?, ?, ?, ?)", returns)

        snaps = []
        for snap_day in ("2025-09-30", "2025-12-31"):
            for sid in range(1, len(stores) + 1):
                for pid in range(1, len(products) + 1):
                    snaps.append((len(snaps) + 1, sid, pid, snap_day, rng.randint(0, 60), rng.choice((5, 10, 15))))
        conn.executemany("INSERT INTO inventory_snapshots VALUES (?, ?, ?, ?, ?, ?)", snaps)

        roles = ("Store Manager", "Assistant Manager", "Sales Associate", "Sales Associate", "Stock Associate")
        employees = [
            (eid, f"Employee {eid:03d}", (eid - 1) % len(stores) + 1, roles[(eid - 1) // len(stores) % len(roles)],
             _day(rng, date(2016, 1, 1), 3300))
            for eid in range(1, 61)
        ]
        conn.executemany("INSERT INTO employees VALUES (?, ?, ?, ?, ?)", employees)

        targets = []
        for sid in range(1, len(stores) + 1):
            for q in QUARTERS:
                targets.append((len(targets) + 1, sid, q, round(rng.uniform(40000, 56000), 2)))
        conn.executemany("INSERT INTO sales_targets VALUES (?, ?, ?, ?)", targets)

        conn.executemany(
            "INSERT INTO app_audit_log VALUES (?, ?, ?, ?)",
            [(i, rng.choice(("login", "export", "settings")), _day(rng) + "T09:00:00", "{}") for i in range(1, 51)],
        )
        conn.executemany(
            "INSERT INTO etl_job_runs VALUES (?, ?, ?, ?, ?)",
            [(i, rng.choice(("load_orders", "load_inventory")), _day(rng) + "T02:00:00", _day(rng) + "T02:10:00", "success")
             for i in range(1, 31)],
        )
        conn.executemany(
            "INSERT INTO ui_preferences VALUES (?, ?, ?, ?)",
            [(i, f"user{i}", rng.choice(("light", "dark")), _day(rng)) for i in range(1, 21)],
        )
        conn.commit()
    finally:
        conn.close()
    return path
