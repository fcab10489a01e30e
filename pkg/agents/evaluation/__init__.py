"""描述即检测的评估指标"""
