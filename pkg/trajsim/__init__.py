"""
File: __init__.py
Path: trajsim/__init__.py
Purpose: Package initialization for the trajsim closed-loop trajectory simulator
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

__version__ = '1.0.0'
