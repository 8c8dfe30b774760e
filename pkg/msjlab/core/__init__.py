"""Configuration, shared dependencies and errors"""
