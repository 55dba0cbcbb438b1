from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER, TA_JUSTIFY
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet

INK = colors.HexColor('#2c3e50')
MUTED = colors.HexColor('#6c757d')
GOOD = colors.HexColor('#27ae60')
WARN = colors.HexColor('#f39c12')
BAD = colors.HexColor('#e74c3c')


def report_styles(title_size=26):
    """Paragraph styles shared by the evaluation and ranking reports."""
    base = getSampleStyleSheet()
    return {
        'title': ParagraphStyle(
            'ReportTitle', parent=base['Heading1'], fontName='Helvetica-Bold',
            fontSize=title_size, leading=title_size + 6, alignment=TA_CENTER,
            textColor=colors.HexColor('#1a1a2e'), spaceAfter=10,
        ),
        'subtitle': ParagraphStyle(
            'ReportSubtitle', parent=base['Normal'], fontName='Helvetica-Oblique',
            fontSize=11, alignment=TA_CENTER, textColor=MUTED, spaceBefore=6, spaceAfter=24,
        ),
        'section': ParagraphStyle(
            'ReportSection', parent=base['Heading2'], fontName='Helvetica-Bold',
            fontSize=15, leading=19, textColor=colors.white, backColor=INK,
            borderPadding=8, spaceBefore=18, spaceAfter=12,
        ),
        'body': ParagraphStyle(
            'ReportBody', parent=base['Normal'], fontSize=9, leading=13,
            leftIndent=10, rightIndent=10, alignment=TA_JUSTIFY,
        ),
        'footer': ParagraphStyle(
            'ReportFooter', parent=base['Normal'], fontName='Helvetica-Oblique',
            fontSize=8, alignment=TA_CENTER, textColor=colors.HexColor('#95a5a6'),
        ),
    }


def key_value_style(font_size=10):
    """Two-column summary block: bold keys on the left, values on the right."""
    return [
        ('BACKGROUND', (0, 0), (-1, -1), colors.HexColor('#f8f9fa')),
        ('TEXTCOLOR', (0, 0), (-1, -1), INK),
        ('FONTNAME', (0, 0), (0, -1), 'Helvetica-Bold'),
        ('FONTSIZE', (0, 0), (-1, -1), font_size),
        ('TOPPADDING', (0, 0), (-1, -1), 6),
        ('BOTTOMPADDING', (0, 0), (-1, -1), 6),
        ('GRID', (0, 0), (-1, -1), 1, colors.HexColor('#dee2e6')),
        ('ROWBACKGROUNDS', (0, 0), (-1, -1), [colors.white, colors.HexColor('#ecf0f1')]),
    ]


def grid_style(font_size=8):
    """Data grid with a dark header row and striped body."""
    return [
        ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#34495e')),
        ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        ('FONTSIZE', (0, 0), (-1, -1), font_size),
        ('ALIGN', (1, 0), (-1, -1), 'CENTER'),
        ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
        ('TOPPADDING', (0, 0), (-1, -1), 4),
        ('BOTTOMPADDING', (0, 0), (-1, -1), 4),
        ('GRID', (0, 0), (-1, -1), 1, colors.HexColor('#bdc3c7')),
        ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.HexColor('#f8f9fa')]),
    ]


def error_color(mean_deg):
    if mean_deg < 11.25:
        return GOOD
    if mean_deg < 30.0:
        return WARN
    return BAD
