from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, PageBreak, Table, TableStyle
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.units import inch
from reportlab.lib import colors
from datetime import datetime

from evaluation.ranking import RankTable, avg_rank, rank_columns, ranked_order
from utils.report_styles import GOOD, grid_style, key_value_style, report_styles

POLICY_TEXT = {
    "fractional": "tied scores share the average of the positions they occupy",
    "min": "tied scores all take the best position they occupy",
}


def write_ranking_pdf(output_path, table: RankTable, tie_policy="fractional", source_name="", invariant=0):
    """
    Average-rank report: summary, ranked methods and the per-column ranks.

    With invariant=1 the file carries no timestamps, so identical inputs
    produce byte-identical PDFs.
    """
    doc = SimpleDocTemplate(
        str(output_path),
        pagesize=landscape(A4),
        leftMargin=0.5*inch,
        rightMargin=0.5*inch,
        topMargin=0.6*inch,
        bottomMargin=0.6*inch,
        invariant=invariant,
        title="Average Rank Report",
    )
    styles = report_styles()
    averages = avg_rank(table, tie_policy)
    ranks = rank_columns(table, tie_policy)
    order = ranked_order(averages)
    index = {m: i for i, m in enumerate(table.methods)}
    n_cols = len(table.columns)
    content = []

    # ==================== TITLE ====================
    banner = Table([['']], colWidths=[9.5*inch], rowHeights=[0.15*inch])
    banner.setStyle(TableStyle([('BACKGROUND', (0, 0), (-1, -1), colors.HexColor('#3498db'))]))
    content += [Spacer(1, 0.3*inch), banner, Spacer(1, 0.3*inch)]
    content.append(Paragraph("AVERAGE RANK REPORT", styles['title']))
    stamp = "" if invariant else f" · generated on {datetime.now().strftime('%B %d, %Y at %H:%M')}"
    content.append(Paragraph(f"tie policy: {tie_policy}{stamp}", styles['subtitle']))

    overview = Table([
        ['Score table:', source_name or '-'],
        ['Methods:', str(len(table.methods))],
        ['Metric columns:', str(n_cols)],
        ['Best method:', f"{order[0]} ({averages[order[0]]:.1f})"],
    ], colWidths=[2.5*inch, 5*inch])
    overview.setStyle(TableStyle(key_value_style(font_size=11) + [('ALIGN', (0, 0), (0, -1), 'RIGHT')]))
    content += [overview, PageBreak()]

    # ==================== RANKING TABLE ====================
    content += [Paragraph("OVERALL RANKING", styles['section']), Spacer(1, 12)]
    rows = [['#', 'Method'] + [f"{c} {'^' if hb else 'v'}" for c, hb in zip(table.columns, table.higher_better)] + ['Avg. Rank']]
    for position, method in enumerate(order, 1):
        rows.append([str(position), method[:24]] + [f"{r:g}" for r in ranks[index[method]]] + [f"{averages[method]:.1f}"])

    metric_width = min(0.75*inch, 6.6*inch / max(n_cols, 1))
    grid = Table(rows, colWidths=[0.4*inch, 1.8*inch] + [metric_width] * n_cols + [0.9*inch], repeatRows=1)
    style = grid_style(font_size=7)
    best = ranks.min(axis=0)
    for position, method in enumerate(order, 1):
        for col in range(n_cols):
            if ranks[index[method], col] == best[col]:
                cell = (col + 2, position)
                style += [('TEXTCOLOR', cell, cell, GOOD), ('FONTNAME', cell, cell, 'Helvetica-Bold')]
    style.append(('FONTNAME', (-1, 1), (-1, -1), 'Helvetica-Bold'))
    grid.setStyle(TableStyle(style))
    content.append(grid)

    # ==================== METHODOLOGY ====================
    content += [Spacer(1, 0.3*inch), Paragraph("RANKING METHODOLOGY", styles['section'])]
    content.append(Paragraph(
        f"Every metric column is ranked on its own (1 = best). Columns marked <b>v</b> are lower-is-better, "
        f"columns marked <b>^</b> higher-is-better. Under the <b>{tie_policy}</b> policy {POLICY_TEXT[tie_policy]}. "
        f"The average rank of a method is the mean of its {n_cols} column ranks; the table is ordered by it.",
        styles['body'],
    ))

    doc.build(content)
    return output_path
