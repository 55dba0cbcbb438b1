from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Table, TableStyle
from reportlab.lib.pagesizes import A4
from reportlab.lib.units import inch
from datetime import datetime

from evaluation.harness import DatasetReport
from utils.report_styles import error_color, grid_style, key_value_style, report_styles


def write_evaluation_pdf(output_path, report: DatasetReport, invariant=0, max_rows=40):
    doc = SimpleDocTemplate(
        str(output_path),
        pagesize=A4,
        leftMargin=0.75*inch,
        rightMargin=0.75*inch,
        topMargin=0.75*inch,
        bottomMargin=0.75*inch,
        invariant=invariant,
        title="Surface Normal Evaluation",
    )
    styles = report_styles()
    content = []

    # ==================== TITLE ====================
    content.append(Paragraph("SURFACE NORMAL EVALUATION", styles['title']))
    subtitle = f"{report.dataset} · {report.mask_kind} mask"
    if not invariant:
        subtitle += f" · {datetime.now().strftime('%B %d, %Y at %H:%M')}"
    content.append(Paragraph(subtitle, styles['subtitle']))

    # ==================== SUMMARY ====================
    content.append(Paragraph("📊 SUMMARY", styles['section']))
    summary_data = [
        ['Samples scored', str(report.n_samples)],
        ['Samples skipped (empty mask)', str(len(report.skipped))],
        ['Masked pixels', f"{report.n_pixels:,}"],
        ['Mean angular error (pixel-pooled)', f"{report.mean_deg:.2f}°"],
        ['Mean angular error (per-sample mean)', f"{report.sample_mean_deg:.2f}°"],
    ]
    for key, value in report.acc.items():
        summary_data.append([f"Pixels within {key}°", f"{value:.1f}%"])
    summary_table = Table(summary_data, colWidths=[3.2*inch, 2.8*inch])
    summary_table.setStyle(TableStyle(key_value_style() + [
        ('ALIGN', (1, 0), (1, -1), 'RIGHT'),
        ('TEXTCOLOR', (1, 3), (1, 3), error_color(report.mean_deg)),
    ]))
    content.append(summary_table)

    # ==================== PER SAMPLE ====================
    content.append(Paragraph("🔍 PER-SAMPLE BREAKDOWN", styles['section']))
    keys = list(report.acc.keys())
    rows = [['Sample', 'Pixels', 'Mean °'] + [f"<{k}°" for k in keys]]
    worst_first = sorted(report.per_sample, key=lambda s: -s.mean_deg)
    shown = worst_first[:max_rows]
    for sample in shown:
        rows.append(
            [sample.sample_id, str(sample.n_pixels), f"{sample.mean_deg:.2f}"]
            + [f"{sample.acc.get(k, 0.0):.1f}" for k in keys]
        )
    table_style = grid_style()
    for row, sample in enumerate(shown, 1):
        table_style.append(('TEXTCOLOR', (2, row), (2, row), error_color(sample.mean_deg)))
    sample_table = Table(rows, repeatRows=1)
    sample_table.setStyle(TableStyle(table_style))
    content.append(sample_table)

    if len(worst_first) > max_rows:
        content.append(Spacer(1, 6))
        content.append(Paragraph(f"{len(worst_first) - max_rows} more samples in the JSON report.", styles['footer']))
    if report.skipped:
        content.append(Spacer(1, 12))
        content.append(Paragraph("Skipped: " + ", ".join(report.skipped), styles['footer']))

    content.append(Spacer(1, 0.4*inch))
    content.append(Paragraph("Rows are ordered worst first. Angles are measured after renormalizing both maps.", styles['footer']))

    doc.build(content)
    return output_path
