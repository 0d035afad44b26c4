"""Numerical building blocks of the fast DHT package"""
