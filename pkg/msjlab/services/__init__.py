"""Service layer for queueing computations"""
