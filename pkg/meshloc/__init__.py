"""Main meshloc package"""
