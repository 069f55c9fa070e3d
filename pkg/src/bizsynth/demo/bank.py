"""Hand-written analytic queries over the demo retail schema, four levels deep.

Every entry pairs an intent and gold SQL with a business question that names no
table or column. Some entries carry deliberately broken drafts that the demo
author emits first so the repair loop has something to fix.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..domain import ComplexityLevel
from ..forge import referenced_tables

REV = "oi.quantity * oi.unit_price * (1 - oi.discount)"
YEAR = "o.order_date BETWEEN '2025-01-01' AND '2025-12-31'"
Q3 = "o.order_date BETWEEN '2025-07-01' AND '2025-09-30'"
Q4 = "o.order_date BETWEEN '2025-10-01' AND '2025-12-31'"
LINES = "orders o JOIN order_items oi ON oi.order_id = o.order_id"


@dataclass(frozen=True)
class BankEntry:
    key: str
    level: ComplexityLevel
    intent: str
    sql: str
    question: str
    paraphrases: tuple[str, str]
    broken: tuple[str, ...] = ()

    @property
    def tables(self) -> frozenset[str]:
        return frozenset(referenced_tables(self.sql))


S, C, D, P = (
    ComplexityLevel.SINGLE_METRIC,
    ComplexityLevel.COMPARATIVE_METRIC,
    ComplexityLevel.DERIVED_METRIC,
    ComplexityLevel.COMPOSITIONAL_TASK,
)

BANK: tuple[BankEntry, ...] = (
    # --- single metric ---
    BankEntry(
        "q3_net_revenue", S,
        "Total net revenue from completed orders in Q3 2025",
        f"SELECT ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} WHERE o.status = 'completed' AND {Q3}",
        "What was our total net revenue from completed orders during the third quarter of 2025?",
        ("How much net revenue did completed orders bring in between July and September 2025?",
         "What did we book in net sales from completed orders in Q3 2025?"),
        broken=(f"SELECT ROUND(SUM(oi.qty * oi.unit_price * (1 - oi.discount)), 2) AS net_revenue FROM {LINES} "
                f"WHERE o.status = 'completed' AND {Q3}",),
    ),
    BankEntry(
        "december_online_orders", S,
        "Number of online orders placed in December 2025",
        "SELECT COUNT(*) AS online_orders FROM orders WHERE channel = 'online' "
        "AND order_date BETWEEN '2025-12-01' AND '2025-12-31'",
        "How many orders did shoppers place through our online channel in December 2025?",
        ("What was the count of online orders placed during December 2025?",
         "How many web orders came in over the month of December 2025?"),
    ),
    BankEntry(
        "west_region_stores", S,
        "List the stores located in the West region",
        "SELECT s.store_name FROM stores s JOIN regions r ON r.region_id = s.region_id "
        "WHERE r.region_name = 'West' ORDER BY s.store_name",
        "Which of our stores operate in the West region, listed in alphabetical order?",
        ("What locations do we run in the West region, sorted alphabetically?",
         "Can you list every West region store in alphabetical order?"),
    ),
    BankEntry(
        "active_electronics", S,
        "Count of active products in the Electronics category",
        "SELECT COUNT(*) AS active_products FROM products p JOIN categories c ON c.category_id = p.category_id "
        "WHERE c.category_name = 'Electronics' AND p.is_active = 1",
        "How many active items do we currently carry in the Electronics assortment?",
        ("What is the number of Electronics items that are still active in our range?",
         "How many Electronics products remain active for sale right now?"),
    ),
    BankEntry(
        "damaged_refunds", S,
        "Total refunds issued in 2025 for items returned as damaged",
        "SELECT ROUND(SUM(refund_amount), 2) AS damaged_refunds FROM returns "
        "WHERE reason = 'damaged' AND return_date BETWEEN '2025-01-01' AND '2025-12-31'",
        "How much did we refund customers during 2025 for merchandise that came back damaged?",
        ("What were total 2025 refunds for damaged merchandise?",
         "How much money went back to customers in 2025 for damaged returns?"),
    ),
    BankEntry(
        "gold_members", S,
        "Number of customers in the gold loyalty tier",
        "SELECT COUNT(*) AS gold_members FROM customers WHERE loyalty_tier = 'gold'",
        "How many shoppers currently sit in the gold tier of our loyalty program?",
        ("What is the headcount of gold tier loyalty members?",
         "How many customers hold gold status in the loyalty program today?"),
    ),
    # --- comparative metric ---
    BankEntry(
        "q4_revenue_by_region", C,
        "Net revenue from completed orders by region for Q4 2025",
        f"SELECT r.region_name, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
        "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
        f"WHERE o.status = 'completed' AND {Q4} GROUP BY r.region_name",
        "For the fourth quarter of 2025, what net revenue did completed orders generate in each region?",
        ("How does Q4 2025 net revenue from completed orders break down by region?",
         "What did each region bring in from completed orders during October to December 2025?"),
        broken=(f"SELECT r.regionname, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
                "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
                f"WHERE o.status = 'completed' AND {Q4} GROUP BY r.regionname",),
    ),
    BankEntry(
        "monthly_completed_orders", C,
        "Completed orders per month across 2025",
        "SELECT substr(order_date, 1, 7) AS order_month, COUNT(*) AS completed_orders FROM orders "
        "WHERE status = 'completed' AND order_date BETWEEN '2025-01-01' AND '2025-12-31' "
        "GROUP BY order_month ORDER BY order_month",
        "How did the number of completed orders trend month by month across 2025?",
        ("What was the monthly count of completed orders through 2025, in calendar order?",
         "Can you show completed orders for each month of 2025?"),
    ),
    BankEntry(
        "h1_units_by_category", C,
        "Units sold per category in the first half of 2025",
        f"SELECT c.category_name, SUM(oi.quantity) AS units_sold FROM {LINES} "
        "JOIN products p ON p.product_id = oi.product_id JOIN categories c ON c.category_id = p.category_id "
        "WHERE o.status = 'completed' AND o.order_date BETWEEN '2025-01-01' AND '2025-06-30' "
        "GROUP BY c.category_name",
        "How many units did we sell in each merchandise category during the first half of 2025?",
        ("What were unit sales by category from January through June 2025?",
         "Break down first-half 2025 units sold across our categories."),
    ),
    BankEntry(
        "revenue_by_channel", C,
        "Net revenue by sales channel for 2025",
        f"SELECT o.channel, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
        f"WHERE o.status = 'completed' AND {YEAR} GROUP BY o.channel",
        "How does full-year 2025 net revenue compare between in-store and online purchases?",
        ("What net revenue did each sales channel produce over 2025?",
         "Split our 2025 completed-order revenue between store and online channels."),
    ),
    BankEntry(
        "refunds_by_reason", C,
        "Refund totals by return reason in 2025",
        "SELECT reason, ROUND(SUM(refund_amount), 2) AS total_refunded FROM returns "
        "WHERE return_date BETWEEN '2025-01-01' AND '2025-12-31' GROUP BY reason",
        "What refund totals did we issue for each return reason during 2025?",
        ("How much did we refund in 2025 for each reason customers gave?",
         "Break down 2025 refunds by the reason for the return."),
    ),
    BankEntry(
        "orders_by_tier", C,
        "Completed orders in 2025 by customer loyalty tier",
        "SELECT cu.loyalty_tier, COUNT(*) AS completed_orders FROM orders o "
        f"JOIN customers cu ON cu.customer_id = o.customer_id WHERE o.status = 'completed' AND {YEAR} "
        "GROUP BY cu.loyalty_tier",
        "How many completed orders did each loyalty tier place over the course of 2025?",
        ("What is the 2025 completed order count for each loyalty tier?",
         "Break down completed 2025 orders by the shopper's loyalty tier."),
    ),
    # --- derived metric ---
    BankEntry(
        "online_order_share", D,
        "Share of completed 2025 orders placed online",
        "SELECT ROUND(100.0 * SUM(CASE WHEN channel = 'online' THEN 1 ELSE 0 END) / COUNT(*), 2) AS online_share_pct "
        "FROM orders WHERE status = 'completed' AND order_date BETWEEN '2025-01-01' AND '2025-12-31'",
        "What percentage of our completed 2025 orders came through the online channel?",
        ("What share of completed orders in 2025 were placed online?",
         "Of all completed 2025 orders, what percent were online purchases?"),
        broken=("SELECT ROUND(100.0 * SUM(CASE WHEN chanel = 'online' THEN 1 ELSE 0 END) / COUNT(*), 2) AS online_share_pct "
                "FROM orders WHERE status = 'completed' AND order_date BETWEEN '2025-01-01' AND '2025-12-31'",),
    ),
    BankEntry(
        "q3_cancellation_rate", D,
        "Cancellation rate for orders placed in Q3 2025",
        "SELECT ROUND(100.0 * SUM(CASE WHEN status = 'cancelled' THEN 1 ELSE 0 END) / COUNT(*), 2) "
        "AS cancellation_rate_pct FROM orders WHERE order_date BETWEEN '2025-07-01' AND '2025-09-30'",
        "What share of orders placed in the third quarter of 2025 ended up cancelled?",
        ("What was the Q3 2025 cancellation rate as a percentage of orders placed?",
         "Of the orders we took between July and September 2025, what percent were cancelled?"),
    ),
    BankEntry(
        "electronics_margin", D,
        "Gross margin percentage on completed Electronics sales in 2025",
        f"SELECT ROUND(100.0 * SUM(oi.quantity * (oi.unit_price * (1 - oi.discount) - p.unit_cost)) / SUM({REV}), 2) "
        f"AS gross_margin_pct FROM {LINES} JOIN products p ON p.product_id = oi.product_id "
        "JOIN categories c ON c.category_id = p.category_id "
        f"WHERE c.category_name = 'Electronics' AND o.status = 'completed' AND {YEAR}",
        "What gross margin percentage did completed Electronics sales deliver over 2025?",
        ("What was our 2025 gross margin rate on Electronics for completed orders?",
         "How profitable were completed Electronics sales in 2025, as a margin percentage?"),
    ),
    BankEntry(
        "q4_online_basket", D,
        "Average order value of completed online orders in Q4 2025",
        f"SELECT ROUND(SUM({REV}) / COUNT(DISTINCT o.order_id), 2) AS avg_order_value FROM {LINES} "
        f"WHERE o.status = 'completed' AND o.channel = 'online' AND {Q4}",
        "What was the average basket value for completed online orders in the fourth quarter of 2025?",
        ("How much did a completed online order average in Q4 2025?",
         "What average order value did online shoppers reach from October to December 2025?"),
    ),
    BankEntry(
        "discounted_revenue_share", D,
        "Share of 2025 net revenue coming from discounted lines",
        f"SELECT ROUND(100.0 * SUM(CASE WHEN oi.discount > 0 THEN {REV} ELSE 0 END) / SUM({REV}), 2) "
        f"AS discounted_revenue_pct FROM {LINES} WHERE o.status = 'completed' AND {YEAR}",
        "What share of our 2025 net revenue from completed orders came from discounted line items?",
        ("What percent of completed-order revenue in 2025 was sold at a discount?",
         "How dependent was 2025 revenue on discounted sales, as a share of the total?"),
    ),
    BankEntry(
        "item_return_rate", D,
        "Share of 2025 order lines that were returned",
        "SELECT ROUND(100.0 * (SELECT COUNT(*) FROM returns rt JOIN order_items oi ON oi.order_item_id = rt.order_item_id "
        f"JOIN orders o ON o.order_id = oi.order_id WHERE {YEAR}) / (SELECT COUNT(*) FROM {LINES} WHERE {YEAR}), 2) "
        "AS return_rate_pct",
        "What percentage of line items sold on 2025 orders were later sent back for a refund?",
        ("What was the 2025 item-level return rate?",
         "Of the line items on 2025 orders, what share came back as returns?"),
    ),
    # --- compositional task ---
    BankEntry(
        "top_region_category", P,
        "Top five region and category combinations by 2025 net revenue",
        f"SELECT r.region_name, c.category_name, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
        "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
        "JOIN products p ON p.product_id = oi.product_id JOIN categories c ON c.category_id = p.category_id "
        f"WHERE o.status = 'completed' AND {YEAR} GROUP BY r.region_name, c.category_name "
        "ORDER BY net_revenue DESC LIMIT 5",
        "Which five region and category combinations generated the highest net revenue from completed "
        "orders in 2025, and what did each bring in?",
        ("What are the top five region-by-category pairs for 2025 net revenue, with their totals?",
         "Rank region and category pairings by completed 2025 revenue and show the leading five."),
        broken=(
            f"SELECT r.region_name, c.categoryname, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
            "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
            "JOIN products p ON p.product_id = oi.product_id JOIN categories c ON c.category_id = p.category_id "
            f"WHERE o.status = 'completed' AND {YEAR} GROUP BY r.region_name, c.categoryname "
            "ORDER BY net_revenue DESC LIMIT 5",
            f"SELECT r.region_name, c.category_name, ROUND(SUM({REV}), 2) AS net_revenue FROM {LINES} "
            "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
            "JOIN products p ON p.product_id = oi.product_id JOIN categories c ON c.category_id = p.category_id "
            f"WHERE o.status = 'completed' AND {YEAR} GROUP BY r.region_name, c.category_name "
            "ORDER BY net_revenue DESC LIMT 5",
        ),
    ),
    BankEntry(
        "top_store_per_region", P,
        "Highest-revenue store within each region for Q4 2025",
        "WITH store_revenue AS ("
        f"SELECT r.region_name, s.store_name, SUM({REV}) AS net_revenue FROM {LINES} "
        "JOIN stores s ON s.store_id = o.store_id JOIN regions r ON r.region_id = s.region_id "
        f"WHERE o.status = 'completed' AND {Q4} GROUP BY r.region_name, s.store_name), "
        "ranked AS (SELECT region_name, store_name, net_revenue, "
        "RANK() OVER (PARTITION BY region_name ORDER BY net_revenue DESC) AS revenue_rank FROM store_revenue) "
        "SELECT region_name, store_name, ROUND(net_revenue, 2) AS net_revenue FROM ranked "
        "WHERE revenue_rank = 1 ORDER BY region_name",
        "In each region, which store led on net revenue in the fourth quarter of 2025, and how much did it generate?",
        ("Which store topped Q4 2025 net revenue in every region, and with what total?",
         "Name the leading store per region for October to December 2025 revenue, with the amount."),
    ),
    BankEntry(
        "online_heavy_categories", P,
        "Categories with the highest online share of 2025 revenue, filtered and ranked",
        f"SELECT c.category_name, ROUND(100.0 * SUM(CASE WHEN o.channel = 'online' THEN {REV} ELSE 0 END) / "
        f"SUM({REV}), 2) AS online_share_pct FROM {LINES} JOIN products p ON p.product_id = oi.product_id "
        "JOIN categories c ON c.category_id = p.category_id "
        f"WHERE o.status = 'completed' AND {YEAR} GROUP BY c.category_name "
        "HAVING online_share_pct > 35 ORDER BY online_share_pct DESC",
        "Which merchandise categories earned more than 35 percent of their 2025 revenue online, "
        "ranked by that online share?",
        ("Rank the categories whose 2025 online revenue share exceeded 35 percent.",
         "Where did online sales account for over 35 percent of a category's 2025 revenue, from highest share down?"),
    ),
    BankEntry(
        "store_growth_q3_q4", P,
        "Three stores with the largest revenue growth from Q3 to Q4 2025",
        "WITH quarterly AS ("
        f"SELECT s.store_name, SUM(CASE WHEN {Q3} THEN {REV} ELSE 0 END) AS q3_revenue, "
        f"SUM(CASE WHEN {Q4} THEN {REV} ELSE 0 END) AS q4_revenue FROM {LINES} "
        "JOIN stores s ON s.store_id = o.store_id WHERE o.status = 'completed' GROUP BY s.store_name) "
        "SELECT store_name, ROUND(q4_revenue - q3_revenue, 2) AS revenue_growth FROM quarterly "
        "ORDER BY revenue_growth DESC LIMIT 3",
        "Which three stores showed the strongest revenue growth from the third to the fourth quarter of 2025, "
        "and by how much?",
        ("What were the three biggest quarter-over-quarter revenue gains by store from Q3 to Q4 2025?",
         "Rank stores by their Q3-to-Q4 2025 revenue increase and show the top three."),
    ),
    BankEntry(
        "stores_below_target", P,
        "Stores that missed their Q4 2025 revenue target, ranked by shortfall",
        "WITH actual AS ("
        f"SELECT o.store_id, SUM({REV}) AS net_revenue FROM {LINES} "
        f"WHERE o.status = 'completed' AND {Q4} GROUP BY o.store_id) "
        "SELECT s.store_name, ROUND(t.target_revenue - a.net_revenue, 2) AS shortfall FROM sales_targets t "
        "JOIN actual a ON a.store_id = t.store_id JOIN stores s ON s.store_id = t.store_id "
        "WHERE t.quarter_label = '2025-Q4' AND a.net_revenue < t.target_revenue ORDER BY shortfall DESC",
        "Which stores fell short of their fourth quarter 2025 revenue goal, and by how much, largest gap first?",
        ("List the stores that missed their Q4 2025 revenue goal, ordered by the size of the miss.",
         "Where did Q4 2025 store revenue land below goal, and how big was each shortfall?"),
    ),
    BankEntry(
        "tier_top_category", P,
        "Leading category by 2025 net revenue within each loyalty tier",
        "WITH tier_category AS ("
        f"SELECT cu.loyalty_tier, c.category_name, SUM({REV}) AS net_revenue FROM {LINES} "
        "JOIN customers cu ON cu.customer_id = o.customer_id JOIN products p ON p.product_id = oi.product_id "
        "JOIN categories c ON c.category_id = p.category_id "
        f"WHERE o.status = 'completed' AND {YEAR} GROUP BY cu.loyalty_tier, c.category_name), "
        "ranked AS (SELECT loyalty_tier, category_name, net_revenue, "
        "RANK() OVER (PARTITION BY loyalty_tier ORDER BY net_revenue DESC) AS tier_rank FROM tier_category) "
        "SELECT loyalty_tier, category_name, ROUND(net_revenue, 2) AS net_revenue FROM ranked "
        "WHERE tier_rank = 1 ORDER BY loyalty_tier",
        "For each loyalty tier, which merchandise category drove the most net revenue in 2025, and how much?",
        ("What was the top-grossing category for every loyalty tier in 2025, with its revenue?",
         "Show the leading 2025 category by revenue within each loyalty tier."),
    ),
)

BY_KEY = {e.key: e for e in BANK}


def entries_for(level: ComplexityLevel) -> list[BankEntry]:
    return [e for e in BANK if e.level is level]


def _norm(text: str) -> str:
    return " ".join(text.split()).lower()


def find_by_intent(intent: str) -> BankEntry | None:
    target = _norm(intent)
    return next((e for e in BANK if _norm(e.intent) == target), None)


def find_by_sql(sql: str) -> BankEntry | None:
    target = _norm(sql)
    return next((e for e in BANK if _norm(e.sql) == target or target in {_norm(b) for b in e.broken}), None)


def find_by_question(question: str) -> BankEntry | None:
    text = _norm(question)
    return next((e for e in BANK if _norm(e.question) in text), None)
