"""
File: reports.py
Path: trajsim/reports.py
Purpose: Plot-data CSV exports and the PDF metrics summary
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

import csv
import os
from datetime import datetime
from html import escape
from typing import Dict, List, Optional

from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from trajsim.events import SimEvent, log_sim_event
from trajsim.metrics import DistributionSummary, MetricsReport
from trajsim.simulation import SimulationOutput


POSITION_FIELDS = ['sample', 'agent_id', 'step', 'x', 'y', 'vx', 'vy']
ENERGY_FIELDS = ['sample', 'step', 'rollout', 'energy', 'selected']
BREAKDOWN_FIELDS = [
    'rollout', 'selected', 'total', 'motion', 'goal', 'linear', 'angular', 'obstacle', 'collision',
]


def _ensure_parent(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def write_positions_csv(output: SimulationOutput, output_path: str) -> str:
    """
    Write one row per (sample, agent, step) simulated state.

    Args:
        output: Simulation output
        output_path: Path to save the CSV file

    Returns:
        str: Path to generated CSV file
    """
    _ensure_parent(output_path)
    num_samples, num_agents, num_steps = output.shape
    with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(POSITION_FIELDS)
        for k in range(num_samples):
            for i in range(num_agents):
                agent_id = output.agent_ids[i]
                for t in range(num_steps):
                    x, y, vx, vy = output.samples[k, i, t]
                    writer.writerow([k, agent_id, t + 1, repr(float(x)), repr(float(y)),
                                     repr(float(vx)), repr(float(vy))])
    log_sim_event(SimEvent.FILE_WRITTEN, details=output_path)
    return output_path


def write_energies_csv(output: SimulationOutput, output_path: str) -> str:
    """
    Write one row per (sample, MPS call, rollout) energy.

    ``step`` is the simulation step at which the call started; ``selected``
    marks the committed rollout.

    Returns:
        str: Path to generated CSV file
    """
    _ensure_parent(output_path)
    with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(ENERGY_FIELDS)
        for k, steps in enumerate(output.diagnostics):
            for call in steps:
                for j, energy in enumerate(call.energies):
                    writer.writerow([k, call.step, j, repr(float(energy)), int(j == call.selected)])
    log_sim_event(SimEvent.FILE_WRITTEN, details=output_path)
    return output_path


def write_breakdown_csv(rows: List[Dict], output_path: str) -> str:
    """
    Write per-rollout factor subtotals.

    Args:
        rows: Dicts keyed by BREAKDOWN_FIELDS
        output_path: Path to save the CSV file

    Returns:
        str: Path to generated CSV file
    """
    _ensure_parent(output_path)
    with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=BREAKDOWN_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, '') for k in BREAKDOWN_FIELDS})
    log_sim_event(SimEvent.FILE_WRITTEN, details=output_path)
    return output_path


def _fmt(value: Optional[float], digits: int = 4) -> str:
    if value is None:
        return 'N/A'
    return f"{value:.{digits}f}"


def _distribution_rows(name: str, summary: DistributionSummary) -> List[str]:
    return [name, str(summary.count), _fmt(summary.mean), _fmt(summary.std),
            _fmt(summary.minimum), _fmt(summary.maximum)]


def generate_metrics_pdf(report: MetricsReport, output_path: str, title: str = "Simulation Metrics Report",
                         source: Optional[str] = None) -> str:
    """
    Generate a one-document PDF summary of a metrics report.

    Args:
        report: Computed metrics
        output_path: Path to save the PDF file
        title: Document title
        source: Rollout file the metrics were computed from

    Returns:
        str: Path to generated PDF file
    """
    _ensure_parent(output_path)
    doc = SimpleDocTemplate(output_path, pagesize=letter)
    styles = getSampleStyleSheet()
    story = []

    title_style = ParagraphStyle(
        'CustomTitle',
        parent=styles['Heading1'],
        fontSize=22,
        textColor=colors.HexColor('#1F3A5F'),
        spaceAfter=24,
        alignment=1  # Center
    )
    story.append(Paragraph(escape(title), title_style))
    story.append(Spacer(1, 0.2 * inch))

    meta_style = styles['Normal']
    report_date = datetime.now().strftime('%B %d, %Y at %I:%M %p')
    story.append(Paragraph(f"<b>Report Generated:</b> {report_date}", meta_style))
    if source:
        story.append(Paragraph(f"<b>Rollouts:</b> {escape(source)}", meta_style))
    story.append(Paragraph(
        f"<b>Samples x Agents x Steps:</b> {report.num_samples} x {report.num_agents} x {report.num_steps}",
        meta_style))
    story.append(Spacer(1, 0.3 * inch))

    story.append(Paragraph("<b>Safety and Map Metrics</b>", styles['Heading2']))
    rates = [
        ['Collision rate:', _fmt(report.collision_rate)],
        ['Offroad rate:', _fmt(report.offroad_rate)],
        ['minADE (m):', _fmt(report.min_ade)],
        ['Distance to object, mean / min (m):',
         f"{_fmt(report.distance_to_object_mean, 2)} / {_fmt(report.distance_to_object_min, 2)}"],
        ['Time to collision, mean / min (s):',
         f"{_fmt(report.time_to_collision.mean, 2)} / {_fmt(report.time_to_collision_min, 2)}"],
        ['Distance to road edge, mean / min (m):',
         f"{_fmt(report.distance_to_road_edge_mean, 2)} / {_fmt(report.distance_to_road_edge_min, 2)}"],
    ]
    table = Table(rates, colWidths=[3.0 * inch, 3.0 * inch])
    table.setStyle(TableStyle([
        ('FONTNAME', (0, 0), (0, -1), 'Helvetica-Bold'),
        ('FONTNAME', (1, 0), (1, -1), 'Helvetica'),
        ('FONTSIZE', (0, 0), (-1, -1), 10),
        ('VALIGN', (0, 0), (-1, -1), 'TOP'),
        ('LEFTPADDING', (0, 0), (-1, -1), 0),
        ('RIGHTPADDING', (0, 0), (-1, -1), 5),
    ]))
    story.append(table)
    story.append(Spacer(1, 0.3 * inch))

    story.append(Paragraph("<b>Kinematic Distributions</b>", styles['Heading2']))
    kinematics = [
        ['Quantity', 'Count', 'Mean', 'Std', 'Min', 'Max'],
        _distribution_rows('Speed (m/s)', report.speed),
        _distribution_rows('Acceleration (m/s^2)', report.acceleration),
        _distribution_rows('Angular speed (rad/s)', report.angular_speed),
        _distribution_rows('Angular acceleration (rad/s^2)', report.angular_acceleration),
    ]
    table = Table(kinematics, colWidths=[2.2 * inch] + [0.9 * inch] * 5)
    table.setStyle(TableStyle([
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
        ('FONTSIZE', (0, 0), (-1, -1), 9),
        ('LINEBELOW', (0, 0), (-1, 0), 0.5, colors.grey),
        ('ALIGN', (1, 0), (-1, -1), 'RIGHT'),
    ]))
    story.append(table)

    doc.build(story)
    log_sim_event(SimEvent.FILE_WRITTEN, details=output_path)
    return output_path
